#include "adarank/train/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace adarank::train {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

std::string section_bytes(const model::ParameterSet<float>& params, const std::string& name) {
  std::string out;
  put_str(out, name);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params) {
    put_str(out, e.name);
    put_u32(out, static_cast<std::uint32_t>(e.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(e.value.cols()));
    for (float v : e.value.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string config_text(const Checkpoint& c) {
  const auto& r = c.model.ranker.config;
  std::ostringstream out;
  out << "num_items=" << r.num_items << '\n'
      << "num_users=" << r.num_users << '\n'
      << "dim=" << r.dim << '\n'
      << "hidden=" << r.hidden << '\n'
      << "encoder=" << model::to_string(r.encoder) << '\n';
  out.precision(17);
  out << "dropout=" << r.dropout << '\n';
  if (c.model.adaptor) {
    const auto& a = c.model.adaptor->config;
    out << "extractor=" << model::to_string(a.extractor) << '\n'
        << "input_mod=" << model::to_string(a.film) << '\n'
        << "param_mod=" << model::to_string(a.pool) << '\n'
        << "slots=" << a.slots << '\n';
  }
  out << "---\n" << c.run_config;
  return out.str();
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::string_view slice(std::size_t from, std::size_t to) const { return bytes_.substr(from, to - from); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  try {
    return std::stoul(kv.at(key));
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint config: bad or missing '" + key + "'");
  }
}

/// Reads one section into `target`, whose names and shapes come from a
/// fresh init of the echoed config.
void read_section(Reader& in, model::ParameterSet<float>& target, const std::string& expected) {
  const std::size_t start = in.pos();
  const std::string name = in.str();
  if (name != expected) throw CheckpointError("expected section '" + expected + "', found '" + name + "'");
  const std::uint32_t count = in.u32();
  if (count != target.size()) {
    throw CheckpointError("section " + name + ": " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(target.size()));
  }
  for (auto& e : target) {
    const std::string tname = in.str();
    const std::uint32_t rows = in.u32(), cols = in.u32();
    if (tname != e.name || rows != e.value.rows() || cols != e.value.cols()) {
      throw CheckpointError("section " + name + ": tensor " + tname + " " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " does not match " + e.name + " " +
                            std::to_string(e.value.rows()) + "x" + std::to_string(e.value.cols()));
    }
    for (float& v : e.value.values()) v = std::bit_cast<float>(in.u32());
  }
  const std::size_t end = in.pos();
  if (in.u32() != crc(in.slice(start, end))) throw CheckpointError("section " + name + ": checksum mismatch");
}

}  // namespace

std::uint32_t section_checksum(const model::ParameterSet<float>& params, const std::string& name) {
  return crc(section_bytes(params, name));
}

std::string serialize(const Checkpoint& checkpoint) {
  std::string out = "ADRK";
  put_u32(out, kCheckpointVersion);
  put_str(out, config_text(checkpoint));
  put_u32(out, checkpoint.model.adaptor ? 2 : 1);
  for (const auto& [set, name] : {std::pair{&checkpoint.model.ranker.params, "theta"},
                                  std::pair{checkpoint.model.adaptor ? &checkpoint.model.adaptor->params : nullptr, "phi"}}) {
    if (!set) continue;
    const std::string bytes = section_bytes(*set, name);
    out += bytes;
    put_u32(out, crc(bytes));
  }
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "ADRK") != 0) throw CheckpointError("not a checkpoint (bad magic)");
  Reader in(std::string_view(bytes).substr(4));
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string text = in.str();
  const auto split = text.find("---\n");
  if (split == std::string::npos) throw CheckpointError("checkpoint config: missing separator");
  std::map<std::string, std::string> kv;
  std::istringstream lines(text.substr(0, split));
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("checkpoint config: bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  Checkpoint c;
  c.run_config = text.substr(split + 4);
  model::RankerConfig rc;
  rc.num_items = to_size(kv, "num_items");
  rc.num_users = to_size(kv, "num_users");
  rc.dim = to_size(kv, "dim");
  rc.hidden = to_size(kv, "hidden");
  try {
    rc.encoder = model::parse_encoder(kv.at("encoder"));
    rc.dropout = std::stod(kv.at("dropout"));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }

  const std::uint32_t sections = in.u32();
  if (sections != 1 && sections != 2) throw CheckpointError("checkpoint has " + std::to_string(sections) + " sections");
  if ((sections == 2) != kv.contains("param_mod")) throw CheckpointError("checkpoint config and sections disagree");
  Rng shapes(0);
  try {
    c.model.ranker = model::BaseRanker<float>::init(rc, shapes);
    if (sections == 2) {
      model::AdaptorConfig ac;
      ac.extractor = model::parse_extractor_mode(kv.at("extractor"));
      ac.film = model::parse_film_mode(kv.at("input_mod"));
      ac.pool = model::parse_pool_mode(kv.at("param_mod"));
      ac.slots = to_size(kv, "slots");
      c.model.adaptor = model::Adaptor<float>::init(ac, rc, shapes);
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  read_section(in, c.model.ranker.params, "theta");
  if (c.model.adaptor) read_section(in, c.model.adaptor->params, "phi");
  if (!in.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = serialize(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace adarank::train
