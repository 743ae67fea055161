#pragma once

#include <map>
#include <string>

#include "camera/rng.hpp"
#include "camera/tape.hpp"
#include "camera/tensor.hpp"

namespace camera {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};
struct VersionError : std::runtime_error {
  explicit VersionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Named parameter tensors with matching gradient buffers. Iteration order is
// the sorted name order (std::map), which fixes initialization draws,
// gradient reductions, and serialization layout.
class ParamStore {
 public:
  // Registers a tensor initialized to scaled-uniform fan-in, U(-s, s) with
  // s = sqrt(1/fan_in). fan_in <= 0 means zero-init (biases, logits).
  void registerParam(const std::string& name, std::vector<int> shape,
                     int fanIn);
  void registerParamConst(const std::string& name, std::vector<int> shape,
                          double value);

  // Draws initial values for all registered tensors in name order.
  void initialize(uint64_t seed);

  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  Tensor& grad(const std::string& name);
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  void zeroGrads();

  const std::map<std::string, Tensor>& all() const { return params_; }
  std::map<std::string, Tensor>& allMutable() { return params_; }
  std::map<std::string, Tensor>& grads() { return grads_; }

  // Tape leaf for a parameter; accumulated grads are pulled back with
  // flushGrads after backward().
  Var use(Tape& t, const std::string& name);
  void flushGrads(Tape& t);

  bool operator==(const ParamStore& o) const { return params_ == o.params_; }

  void save(const std::string& path) const;   // "CAMR" checkpoint
  void load(const std::string& path);

 private:
  struct InitSpec {
    int fanIn = 0;
    double constValue = 0.0;
    bool isConst = false;
  };
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> grads_;
  std::map<std::string, InitSpec> init_;
  // per-tape bindings: (tape node id, name), flushed after backward.
  // Keyed by the tape serial so a new tape reusing a stack address cannot
  // inherit stale bindings.
  std::vector<std::pair<int, std::string>> bindings_;
  uint64_t boundSerial_ = 0;
};

}  // namespace camera
