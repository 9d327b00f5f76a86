#include "ptonet/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ptonet/error.hpp"

namespace ptonet::plant {

CanonicalStructure::CanonicalStructure(std::vector<std::size_t> block_sizes)
    : blocks_(std::move(block_sizes)) {
  if (blocks_.empty()) throw ValidationError("structure needs at least one block");
  offsets_.reserve(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] == 0) {
      throw ValidationError("block " + std::to_string(i + 1) + " has size zero");
    }
    offsets_.push_back(n_);
    n_ += blocks_[i];
  }
}

CanonicalMatrices build_canonical(const CanonicalStructure& structure) {
  const std::size_t n = structure.state_dim();
  const std::size_t N = structure.subsystems();
  CanonicalMatrices m{DenseMatrix(n, n), DenseMatrix(n, N), DenseMatrix(N, n), {}};
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t off = structure.offset(i);
    const std::size_t ni = structure.block_size(i);
    for (std::size_t k = 0; k + 1 < ni; ++k) m.A(off + k, off + k + 1) = 1.0;
    m.B(off + ni - 1, i) = 1.0;
    m.H(i, off) = 1.0;
    m.h_rows.push_back(m.H.row_vector(i));
  }
  return m;
}

namespace {

void check_gammas(const Vector& gammas, std::size_t N) {
  if (gammas.size() != N) {
    throw ValidationError("expected " + std::to_string(N) + " Lipschitz constants, got " +
                          std::to_string(gammas.size()));
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(gammas[i]) || gammas[i] < 0.0) {
      throw ValidationError("gamma_" + std::to_string(i + 1) + " must be finite and nonnegative");
    }
  }
}

}  // namespace

NonlinearityProgram parse_nonlinearity(const std::vector<std::string>& lines,
                                       const CanonicalStructure& structure, Vector gammas) {
  const std::size_t N = structure.subsystems();
  if (lines.size() != N) {
    throw ValidationError("expected one nonlinearity expression per subsystem (" + std::to_string(N) +
                          "), got " + std::to_string(lines.size()));
  }
  check_gammas(gammas, N);
  NonlinearityProgram program;
  program.gammas = std::move(gammas);
  program.expressions.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    program.expressions.push_back(expr::parse_expression(lines[i], i + 1, structure.block_sizes(), i + 1));
  }
  return program;
}

NonlinearityProgram parse_nonlinearity(std::string_view source, const CanonicalStructure& structure,
                                       Vector gammas) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= source.size()) {
    const auto end = source.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < source.size()) lines.emplace_back(source.substr(start));
      break;
    }
    lines.emplace_back(source.substr(start, end - start));
    start = end + 1;
  }
  return parse_nonlinearity(lines, structure, std::move(gammas));
}

Vector eval_nonlinearity(const NonlinearityProgram& program, std::span<const double> x) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k])) throw NumericalError("eval_nonlinearity: non-finite state entry");
  }
  Vector out(program.expressions.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = program.expressions[i].evaluate(x);
  return out;
}

Vector eval_nonlinearity_difference(const NonlinearityProgram& program, std::span<const double> x,
                                    std::span<const double> e) {
  const double xs = std::max(1.0, numerics::norm_inf(x));
  const double es = numerics::norm_inf(e);
  const std::size_t N = program.expressions.size();
  Vector out(N, 0.0);
  if (es == 0.0) return out;
  if (es > 1e-3 * xs) {
    Vector shifted(x.begin(), x.end());
    for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] -= e[k];
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = program.expressions[i].evaluate(x) - program.expressions[i].evaluate(shifted);
    }
    return out;
  }
  // phi(x) - phi(x - e) = int_0^1 grad phi(x - (1 - s) e) . e ds, 3-point
  // Gauss-Legendre.
  static constexpr double kNodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
  static constexpr double kWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  Vector point(x.size());
  for (int q = 0; q < 3; ++q) {
    for (std::size_t k = 0; k < point.size(); ++k) point[k] = x[k] - (1.0 - kNodes[q]) * e[k];
    for (std::size_t i = 0; i < N; ++i) {
      out[i] += kWeights[q] * program.expressions[i].evaluate_directional(point, e).slope;
    }
  }
  return out;
}

ObservabilityReport check_joint_observability(const DenseMatrix& A, const DenseMatrix& H) {
  if (!A.square() || H.cols() != A.rows()) {
    throw ValidationError("observability: A must be n x n and H must have n columns");
  }
  const std::size_t n = A.rows();
  const std::size_t p = H.rows();
  DenseMatrix obs(p * n, n);
  DenseMatrix block = H;
  for (std::size_t k = 0; k < n; ++k) {
    obs.set_block(k * p, 0, block);
    block = block * A;
  }
  ObservabilityReport report;
  report.required = n;
  report.rank = numerics::rank(obs, 1e-10);
  report.observable = report.rank == n;
  return report;
}

double compute_kf(const CanonicalStructure& structure, std::span<const double> gammas) {
  const std::size_t N = structure.subsystems();
  if (gammas.size() != N) throw ValidationError("compute_kf: gamma count differs from N");
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(gammas[i]) || gammas[i] < 0.0) {
      throw ValidationError("compute_kf: gammas must be finite and nonnegative");
    }
    const double t = static_cast<double>(structure.block_size(i)) * gammas[i];
    sum += t * t;
  }
  return std::sqrt(static_cast<double>(N) * sum);
}

LipschitzEstimate estimate_lipschitz(const NonlinearityProgram& program,
                                     const CanonicalStructure& structure,
                                     const std::vector<Interval>& box, std::size_t sample_count,
                                     std::uint64_t seed) {
  const std::size_t n = structure.state_dim();
  const std::size_t N = structure.subsystems();
  if (box.size() != n) throw ValidationError("estimate_lipschitz: box needs one interval per state");
  if (sample_count < 2) throw ValidationError("estimate_lipschitz: need at least two samples");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
      throw ValidationError("estimate_lipschitz: box bounds must be finite with lo <= hi");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](Vector& v) {
    for (std::size_t k = 0; k < n; ++k) v[k] = box[k].first + unit(rng) * (box[k].second - box[k].first);
  };

  LipschitzEstimate est;
  est.gamma_hat.assign(N, 0.0);
  est.samples = sample_count;
  Vector a(n), b(n), dir(n, 0.0);
  for (std::size_t s = 0; s < sample_count; ++s) {
    draw(a);
    draw(b);
    for (std::size_t i = 0; i < N; ++i) {
      const auto& f = program.expressions[i];
      const std::size_t prefix = structure.offset(i) + structure.block_size(i);
      // Difference quotient over the variables phi_i may depend on.
      double dist2 = 0.0;
      for (std::size_t k = 0; k < prefix; ++k) dist2 += (a[k] - b[k]) * (a[k] - b[k]);
      if (dist2 > 0.0) {
        const double q = std::abs(f.evaluate(a) - f.evaluate(b)) / std::sqrt(dist2);
        est.gamma_hat[i] = std::max(est.gamma_hat[i], q);
      }
      // Gradient norm at a: the supremum of local quotients on a convex box.
      double g2 = 0.0;
      for (std::size_t k = 0; k < prefix; ++k) {
        dir[k] = 1.0;
        const double d = f.evaluate_directional(a, dir).slope;
        dir[k] = 0.0;
        g2 += d * d;
      }
      est.gamma_hat[i] = std::max(est.gamma_hat[i], std::sqrt(g2));
    }
  }
  return est;
}

PlantModel make_plant(CanonicalStructure structure, NonlinearityProgram nonlinearity) {
  if (nonlinearity.expressions.size() != structure.subsystems()) {
    throw ValidationError("nonlinearity has the wrong number of expressions");
  }
  check_gammas(nonlinearity.gammas, structure.subsystems());
  PlantModel plant;
  plant.matrices = build_canonical(structure);
  plant.structure = std::move(structure);
  plant.nonlinearity = std::move(nonlinearity);
  return plant;
}

}  // namespace ptonet::plant
