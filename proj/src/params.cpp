#include "camera/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "camera/kernels.hpp"

namespace camera {
namespace {

constexpr uint32_t kCheckpointVersion = 1;
const char kMagic[4] = {'C', 'A', 'M', 'R'};

void writeU16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
void writeU32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
void writeF64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint16_t readU16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  if (!is) throw ParseError("checkpoint truncated");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t readU32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ParseError("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}
double readF64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void ParamStore::registerParam(const std::string& name, std::vector<int> shape,
                               int fanIn) {
  params_[name] = Tensor(shape);
  grads_[name] = Tensor(shape);
  init_[name] = InitSpec{fanIn, 0.0, false};
}

void ParamStore::registerParamConst(const std::string& name,
                                    std::vector<int> shape, double value) {
  params_[name] = Tensor(shape, value);
  grads_[name] = Tensor(shape);
  init_[name] = InitSpec{0, value, true};
}

void ParamStore::initialize(uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, tensor] : params_) {
    const InitSpec& spec = init_[name];
    if (spec.isConst) {
      tensor.fill(spec.constValue);
    } else if (spec.fanIn > 0) {
      const double s = std::sqrt(1.0 / spec.fanIn);
      for (size_t i = 0; i < tensor.size(); ++i)
        tensor[i] = rng.uniform(-s, s);
    } else {
      tensor.fill(0.0);
    }
  }
}

Tensor& ParamStore::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::runtime_error("unknown parameter: " + name);
  return it->second;
}
const Tensor& ParamStore::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::runtime_error("unknown parameter: " + name);
  return it->second;
}
Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end())
    throw std::runtime_error("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zeroGrads() {
  for (auto& [name, g] : grads_) g.fill(0.0);
}

Var ParamStore::use(Tape& t, const std::string& name) {
  if (boundSerial_ != t.serial()) {
    bindings_.clear();
    boundSerial_ = t.serial();
  }
  Var v = t.leaf(param(name));
  bindings_.emplace_back(v.id, name);
  return v;
}

void ParamStore::flushGrads(Tape& t) {
  if (boundSerial_ != t.serial()) {
    bindings_.clear();
    return;
  }
  for (const auto& [id, name] : bindings_) {
    Var v{id};
    if (!t.gradLive(v)) continue;
    const Tensor& g = t.grad(v);
    kern::active().axpy(1.0, g.data(), grads_[name].data(), g.size());
  }
  bindings_.clear();
  boundSerial_ = 0;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kMagic, 4);
  writeU32(os, kCheckpointVersion);
  writeU32(os, static_cast<uint32_t>(params_.size()));
  for (const auto& [name, tensor] : params_) {
    writeU16(os, static_cast<uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(tensor.rank()));
    for (int i = 0; i < tensor.rank(); ++i)
      writeU32(os, static_cast<uint32_t>(tensor.dim(i)));
    for (size_t i = 0; i < tensor.size(); ++i) writeF64(os, tensor[i]);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

void ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw VersionError("not a CAMR checkpoint: " + path);
  const uint32_t version = readU32(is);
  if (version != kCheckpointVersion)
    throw VersionError("unsupported checkpoint version " +
                       std::to_string(version));
  const uint32_t count = readU32(is);
  std::map<std::string, Tensor> loaded;
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t nameLen = readU16(is);
    std::string name(nameLen, '\0');
    is.read(name.data(), nameLen);
    if (!is) throw ParseError("checkpoint truncated in tensor name");
    const int rank = is.get();
    if (rank < 0 || rank > 8) throw ParseError("corrupt tensor rank");
    std::vector<int> shape(static_cast<size_t>(rank));
    size_t n = 1;
    for (int d = 0; d < rank; ++d) {
      const uint32_t ext = readU32(is);
      if (ext == 0 || ext > (1u << 24)) throw ParseError("corrupt tensor extent");
      shape[static_cast<size_t>(d)] = static_cast<int>(ext);
      n *= ext;
    }
    Tensor tensor(shape);
    for (size_t j = 0; j < n; ++j) tensor[j] = readF64(is);
    loaded.emplace(std::move(name), std::move(tensor));
  }
  params_ = std::move(loaded);
  grads_.clear();
  for (const auto& [name, tensor] : params_)
    grads_[name] = Tensor(tensor.shape());
}

}  // namespace camera
