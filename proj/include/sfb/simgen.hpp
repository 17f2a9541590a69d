#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfb/fdata.hpp"
#include "sfb/grid.hpp"

namespace sfb::simgen {

// Orthonormal Fourier functions f_1 = 1, f_{2k} = sqrt(2) sin(2 pi k u),
// f_{2k+1} = sqrt(2) cos(2 pi k u) on the grid's interval (u rescaled to [0,1],
// values scaled by 1/sqrt(interval length)). Returns count x nc, row-major.
std::vector<double> fourier_basis(int count, const Grid& g);

// Multivariate eigenfunctions psi_m^{(j)}(t_c), layout [m][j][c] (M x p x nc).
// Variable j of component m takes Fourier function index m*p + j (interleaved
// assignment) scaled by 1/sqrt(p), which makes the multivariate system
// orthonormal under the discrete inner product.
std::vector<double> fourier_eigenbasis(int M, const Grid& g, int p);

struct SimConfig {
  int model_id = 1;                    // 1..8
  int n = 100;
  Grid grid = Grid::equidistant();
  int p = 3;                           // 3 as written; 1 for the univariate reduction
  double contamination = 0.1;
  std::uint64_t seed = 1;
  int M = 9;                           // basis truncation; nu_m = (M+1-m)/M
  double rho_cross = 0.3;              // model 8 cross-correlation
};

struct LabeledDataset {
  CompleteCurves curves;   // observed Y = signal + noise
  CompleteCurves signal;   // noise-free X = mu + u
  std::vector<char> outlier;
  SimConfig config;
};

LabeledDataset generate(const SimConfig& c);

enum class SparsifyKind { point, peak, partial };

std::string to_string(SparsifyKind k);
SparsifyKind sparsify_kind_from_string(const std::string& s);

struct SparsifyConfig {
  SparsifyKind kind = SparsifyKind::point;
  double p_sparse = 1.0;
  double p_curve = 0.2;
  std::uint64_t seed = 1;
};

// Bernoulli(p_sparse) selects sparse subjects. Point sparseness removes each
// grid cell independently with probability p_curve; peak/partial remove the
// contiguous window [t_start, t_start + p_curve] (fractions of the domain),
// with t_start drawn per curve (peak) or shared by all sparse curves and
// variables (partial).
GridMask sparsify(const CompleteCurves& d, const SparsifyConfig& c);

}  // namespace sfb::simgen
