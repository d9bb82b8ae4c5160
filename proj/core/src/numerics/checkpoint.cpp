#include "mmloco/numerics/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmloco::numerics {

namespace {

constexpr char kMagic[4] = {'W', 'A', 'Q', '1'};

template <class T>
void write_le(std::ostream& out, T v) {
  // Target platforms here are little-endian; byte order is pinned by test.
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

double u64_as_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, sizeof(d));
  return d;
}

std::uint64_t double_as_u64(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof(v));
  return v;
}

}  // namespace

void Checkpoint::put(const std::string& name, Tensor t) {
  if (!records_.count(name)) order_.push_back(name);
  records_[name] = std::move(t);
}

void Checkpoint::put_scalar(const std::string& name, double v) { put(name, Tensor(v)); }

void Checkpoint::put_u64(const std::string& name, std::uint64_t v) {
  put(name, Tensor(u64_as_double(v)));
}

void Checkpoint::put_u64s(const std::string& name, const std::vector<std::uint64_t>& v) {
  std::vector<double> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) data[i] = u64_as_double(v[i]);
  put(name, Tensor({v.size()}, std::move(data)));
}

bool Checkpoint::has(const std::string& name) const { return records_.count(name) > 0; }

const Tensor& Checkpoint::get(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw std::runtime_error("checkpoint: missing record " + name);
  return it->second;
}

double Checkpoint::get_scalar(const std::string& name) const { return get(name).data.at(0); }

std::uint64_t Checkpoint::get_u64(const std::string& name) const {
  return double_as_u64(get(name).data.at(0));
}

std::vector<std::uint64_t> Checkpoint::get_u64s(const std::string& name) const {
  const Tensor& t = get(name);
  std::vector<std::uint64_t> out(t.numel());
  for (std::size_t i = 0; i < t.numel(); ++i) out[i] = double_as_u64(t.data[i]);
  return out;
}

std::vector<std::string> Checkpoint::names() const { return order_; }

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  out.write(kMagic, 4);
  for (const std::string& name : order_) {
    const Tensor& t = records_.at(name);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) write_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  Checkpoint ck;
  while (true) {
    std::uint32_t name_len;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.eof()) break;
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rank = read_le<std::uint32_t>(in);
    Shape shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<std::size_t>(read_le<std::uint64_t>(in));
      numel *= shape[i];
    }
    std::vector<double> data(numel);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated record " + name);
    ck.put(name, Tensor(std::move(shape), std::move(data)));
  }
  return ck;
}

}  // namespace mmloco::numerics
