#ifndef KCODE_SYNTH_HPP
#define KCODE_SYNTH_HPP

#include "kcode/common.hpp"

#include <vector>

namespace kcode {

struct LabeledVectors {
  Matrix x;                 // d x (perClass * classes), column-major samples
  std::vector<int> labels;  // one label per column, blocks of perClass
};

// 2-D points on concentric circles (one radius per class) with Gaussian
// radial noise. Deterministic per seed.
LabeledVectors gen_circles(Index perClass, const std::vector<double>& radii,
                           double noise, std::uint64_t seed);

// Gaussian mixture: centers is d x C, one covariance per class (symmetric
// PSD). classLabels, when nonempty, assigns a label to each center so
// several blobs can share a class; default is label = center index.
LabeledVectors gen_blobs(Index perClass, const Matrix& centers,
                         const std::vector<Matrix>& covariances,
                         std::uint64_t seed,
                         const std::vector<int>& classLabels = {});

// Random SPD matrices Q diag(lambda) Q' with Q orthogonal and eigenvalues
// log-uniform in [1/anisotropy, anisotropy]. Exactly symmetric output.
std::vector<Matrix> gen_spd(Index count, Index dim, double anisotropy,
                            std::uint64_t seed);

}  // namespace kcode

#endif
