#include "camera/tensor.hpp"

#include <cmath>

namespace camera {

bool Tensor::allFinite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace camera
