#include "ramdepth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ramdepth::inline RAMDEPTH_PRECISION {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get(const char* what) {
    T value;
    need(sizeof(T), what);
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  void get_floats(float* dst, std::size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw ParseError(std::string("checkpoint truncated while reading ") + what, pos_);
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, t] : params.all()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    for (real v : t.data()) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

std::map<std::string, CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (r.get_string(4, "magic") != std::string(kCheckpointMagic, 4)) throw ParseError("bad checkpoint magic", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  std::map<std::string, CheckpointEntry> entries;
  while (!r.done()) {
    const auto len = r.get<std::uint32_t>("name length");
    std::string name = r.get_string(len, "name");
    const auto rank = r.get<std::uint32_t>("rank");
    CheckpointEntry e;
    for (std::uint32_t i = 0; i < rank; ++i) e.shape.push_back(r.get<std::uint32_t>("extent"));
    e.values.resize(static_cast<std::size_t>(shape_numel(e.shape)));
    r.get_floats(e.values.data(), e.values.size(), "payload");
    if (!entries.emplace(name, std::move(e)).second) {
      throw ParseError("duplicate parameter '" + name + "' in checkpoint", r.pos());
    }
  }
  return entries;
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& params) {
  auto entries = read_checkpoint(path);
  if (entries.size() != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(entries.size()) + " parameters, model has " +
                     std::to_string(params.size()));
  }
  for (const auto& [name, t] : params.all()) {
    auto it = entries.find(name);
    if (it == entries.end()) throw ShapeError("checkpoint lacks parameter '" + name + "'");
    if (it->second.shape != t.shape()) {
      throw ShapeError("checkpoint parameter '" + name + "' has shape " + shape_str(it->second.shape) +
                       ", model expects " + shape_str(t.shape()));
    }
    Tensor dst = t;
    auto d = dst.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<real>(it->second.values[i]);
  }
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
