#pragma once

// Experiment drivers behind the command-line tool. Each run produces one CSV
// row; rows come out in input order (conditions, then repeats).
//
// qr rows:  m,n,family,cond,mode,backward_error,orthogonality_normalized,flops,wall_time_ms
// lls rows: m,n,family,cond,solver,mode,iterations,converged,optimality,optimality_relative,status,wall_time_ms

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mpqr/io.hpp"
#include "mpqr/lls.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/metrics.hpp"
#include "mpqr/recursive_qr.hpp"

namespace mpqr::experiment {

inline constexpr std::string_view kQrHeader =
    "m,n,family,cond,mode,backward_error,orthogonality_normalized,flops,wall_time_ms";
inline constexpr std::string_view kLlsHeader =
    "m,n,family,cond,solver,mode,iterations,converged,optimality,optimality_relative,status,wall_time_ms";

enum class Solver { NormalEquations, QrDirect, HouseholderDirect, CglsPreconditioned, CglsPlain };

constexpr std::string_view to_string(Solver s) noexcept {
  switch (s) {
    case Solver::NormalEquations: return "ne";
    case Solver::QrDirect: return "qr-direct";
    case Solver::HouseholderDirect: return "hh-direct";
    case Solver::CglsPreconditioned: return "cgls-pre";
    case Solver::CglsPlain: return "cgls-plain";
  }
  return "?";
}

inline std::optional<Solver> parse_solver(std::string_view s) noexcept {
  for (Solver v : {Solver::NormalEquations, Solver::QrDirect, Solver::HouseholderDirect, Solver::CglsPreconditioned,
                   Solver::CglsPlain})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

inline std::optional<GemmVariant> parse_mode(std::string_view s) noexcept {
  for (GemmVariant v : {GemmVariant::EmulatedTensorCore, GemmVariant::Fp32, GemmVariant::Fp64})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

/// Matrix source shared by both experiments: a generated family or a file.
struct Problem {
  index_t m = 1024;
  index_t n = 512;
  Family family = Family::Arithmetic;
  std::vector<double> conds{1e4};
  std::uint64_t seed = 1;
  std::optional<std::string> input;
  index_t repeats = 1;
};

struct QrOptions {
  Problem problem;
  GemmVariant mode = GemmVariant::EmulatedTensorCore;
  index_t cutoff = 128;
  bool reorthogonalize = false;
  bool timing = true;
};

struct LlsOptions {
  Problem problem;
  Solver solver = Solver::CglsPreconditioned;
  GemmVariant mode = GemmVariant::EmulatedTensorCore;
  index_t cutoff = 128;
  double tolerance = 1e-12;
  index_t max_iterations = 200;
  bool timing = true;
};

namespace detail {

struct Instance {
  Matrix<double> a;
  std::string family;
  double cond = 0.0;
  std::uint64_t seed = 0;
};

/// Expands the problem into (condition, repeat) instances in output order.
/// Repeat r of a generated matrix uses seed + r. Every instance is normalized
/// to max |a_ij| <= 1.
inline void for_each_instance(const Problem& p, const std::function<void(const Instance&)>& fn) {
  if (p.repeats == 0) throw Error("repeats must be >= 1");
  if (p.input) {
    const Matrix<double> loaded = io::load_matrix(*p.input);
    const Normalized norm = normalize_for_half(loaded.view());
    for (index_t r = 0; r < p.repeats; ++r) fn(Instance{norm.matrix, "file", 0.0, p.seed + r});
    return;
  }
  const std::vector<double> conds = is_svd_family(p.family) ? p.conds : std::vector<double>{1.0};
  for (double cond : conds) {
    for (index_t r = 0; r < p.repeats; ++r) {
      const Matrix<double> a = generate(p.m, p.n, SpectrumSpec{p.family, cond, p.seed + r});
      fn(Instance{normalize_for_half(a.view()).matrix, std::string(to_string(p.family)),
                  is_svd_family(p.family) ? cond : 0.0, p.seed + r});
    }
  }
}

inline std::string timing_field(bool enabled, std::chrono::steady_clock::duration d) {
  if (!enabled) return "NA";
  return io::format_double(std::chrono::duration<double, std::milli>(d).count());
}

inline std::string cond_field(const Instance& inst) {
  return inst.cond > 0.0 ? io::format_double(inst.cond) : "NA";
}

}  // namespace detail

template <class T>
QrFactors<T> factorize(ConstView<double> a, const QrConfig& cfg, bool reorth) {
  const Matrix<T> at = Matrix<T>::from(a);
  QrFactors<T> f = rmgsqr(at.view(), cfg);
  if (reorth) f = reorthogonalize(f, cfg);
  return f;
}

/// QR accuracy sweep; writes the header and one row per instance.
inline void run_qr(const QrOptions& opt, std::ostream& out) {
  out << kQrHeader << '\n';
  detail::for_each_instance(opt.problem, [&](const detail::Instance& inst) {
    FlopCounter flops;
    QrConfig cfg;
    cfg.cutoff = opt.cutoff;
    cfg.gemm_mode = GemmMode{opt.mode, &flops};
    const auto start = std::chrono::steady_clock::now();
    double backward = 0.0;
    double orth = 0.0;
    std::chrono::steady_clock::duration elapsed{};
    if (opt.mode == GemmVariant::Fp64) {
      const QrFactors<double> f = factorize<double>(inst.a.view(), cfg, opt.reorthogonalize);
      elapsed = std::chrono::steady_clock::now() - start;
      backward = qr_backward_error(inst.a.view(), f.Q.view(), f.R.view());
      orth = q_orthogonality(f.Q.view(), true);
    } else {
      const QrFactors<float> f = factorize<float>(inst.a.view(), cfg, opt.reorthogonalize);
      elapsed = std::chrono::steady_clock::now() - start;
      const Matrix<float> af = Matrix<float>::from(inst.a);
      backward = qr_backward_error(af.view(), f.Q.view(), f.R.view());
      orth = q_orthogonality(f.Q.view(), true);
    }
    out << inst.a.rows() << ',' << inst.a.cols() << ',' << inst.family << ',' << detail::cond_field(inst) << ','
        << to_string(opt.mode) << ',' << io::format_double(backward) << ',' << io::format_double(orth) << ','
        << flops.total() << ',' << detail::timing_field(opt.timing, elapsed) << '\n';
  });
}

/// Least-squares sweep. Solver failures (breakdown, rank deficiency) become
/// rows with a status other than "ok"; non-convergence is reported in the
/// converged column.
inline void run_lls(const LlsOptions& opt, std::ostream& out) {
  out << kLlsHeader << '\n';
  detail::for_each_instance(opt.problem, [&](const detail::Instance& inst) {
    const ConstView<double> a = inst.a.view();
    const std::vector<double> b = generate_rhs(a.rows(), inst.seed);
    QrConfig qr_cfg;
    qr_cfg.cutoff = opt.cutoff;
    qr_cfg.gemm_mode = GemmMode{opt.mode, nullptr};
    const CglsConfig cgls_cfg{opt.tolerance, opt.max_iterations};

    std::vector<double> x;
    index_t iterations = 0;
    bool converged = false;
    std::string status = "ok";
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (opt.solver) {
        case Solver::NormalEquations:
          x = solve_normal_equations(a, b);
          converged = true;
          break;
        case Solver::QrDirect:
          x = solve_direct_qr(a, b, qr_cfg);
          converged = true;
          break;
        case Solver::HouseholderDirect:
          x = opt.mode == GemmVariant::Fp64 ? solve_direct_householder<double>(a, b)
                                            : solve_direct_householder<float>(a, b);
          converged = true;
          break;
        case Solver::CglsPreconditioned:
        case Solver::CglsPlain: {
          CglsReport rep = opt.solver == Solver::CglsPlain ? solve_cgls_plain(a, b, cgls_cfg)
                                                           : solve_cgls_preconditioned(a, b, qr_cfg, cgls_cfg);
          x = std::move(rep.x);
          iterations = rep.iterations;
          converged = rep.converged;
          break;
        }
      }
    } catch (const IllConditionedError&) {
      status = "ill_conditioned";
    } catch (const RankDeficiencyError&) {
      status = "rank_deficient";
    } catch (const SingularTriangularError&) {
      status = "singular";
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;

    std::string optimality = "NA";
    std::string relative = "NA";
    if (status == "ok") {
      optimality = io::format_double(lls_optimality(a, x, b));
      relative = io::format_double(lls_optimality_relative(a, x, b, spectral_norm(a)));
    }
    std::string_view mode = to_string(opt.mode);
    if (opt.solver == Solver::NormalEquations || opt.solver == Solver::CglsPlain) mode = "fp64";
    if (opt.solver == Solver::HouseholderDirect && opt.mode == GemmVariant::EmulatedTensorCore) mode = "fp32";
    out << a.rows() << ',' << a.cols() << ',' << inst.family << ',' << detail::cond_field(inst) << ','
        << to_string(opt.solver) << ',' << mode << ','
        << iterations << ',' << (converged ? 1 : 0) << ',' << optimality << ',' << relative << ',' << status << ','
        << detail::timing_field(opt.timing, elapsed) << '\n';
  });
}

}  // namespace mpqr::experiment
