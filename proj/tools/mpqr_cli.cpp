// mpqr: experiment driver for the mixed-precision QR library.
//
//   mpqr qr      --m 1024 --n 512 --family arithmetic --cond 1e1,1e2 --mode tc
//   mpqr lls     --m 2048 --n 1024 --family uniform01 --solver cgls-pre
//   mpqr matgen  --m 4 --n 4 --family clustered --cond 1e4 --out a.bin
//   mpqr convert --input a.bin --out a.csv
//
// CSV goes to stdout; diagnostics go to stderr.

#include <iostream>
#include <vector>
#include <string>

#include <CLI11.hpp>

#include "mpqr/experiment.hpp"
#include "mpqr/io.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/metrics.hpp"

namespace {

using namespace mpqr;

template <class E>
std::vector<std::string> names(std::initializer_list<E> values) {
  std::vector<std::string> out;
  for (E v : values) out.emplace_back(to_string(v));
  return out;
}

const auto kFamilies = names({Family::Uniform01, Family::UniformSym, Family::Normal, Family::Geometric,
                              Family::Arithmetic, Family::Clustered});
const auto kModes = names({GemmVariant::EmulatedTensorCore, GemmVariant::Fp32, GemmVariant::Fp64});
const auto kSolvers = names({experiment::Solver::NormalEquations, experiment::Solver::QrDirect,
                             experiment::Solver::HouseholderDirect,
                             experiment::Solver::CglsPreconditioned, experiment::Solver::CglsPlain});

void add_problem_flags(CLI::App* cmd, experiment::Problem& p, std::string& family) {
  cmd->add_option("--m", p.m, "rows")->check(CLI::PositiveNumber);
  cmd->add_option("--n", p.n, "columns")->check(CLI::PositiveNumber);
  cmd->add_option("--family", family, "matrix family")->check(CLI::IsMember(kFamilies));
  cmd->add_option("--cond", p.conds, "condition number(s), comma separated")
      ->delimiter(',')
      ->check(CLI::Range(1.0, 1e300));
  cmd->add_option("--seed", p.seed, "generator seed");
  cmd->add_option("--repeats", p.repeats, "runs per condition number")->check(CLI::PositiveNumber);
  cmd->add_option("--input", p.input, "read the matrix from a .bin or .csv file instead of generating it")
      ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-precision recursive QR and least-squares experiments"};
  app.require_subcommand(1);

  experiment::QrOptions qr;
  CLI::App* qr_cmd = app.add_subcommand("qr", "factorize and report backward error and orthogonality");
  std::string qr_family = "arithmetic";
  std::string qr_mode = "tc";
  add_problem_flags(qr_cmd, qr.problem, qr_family);
  qr_cmd->add_option("--mode", qr_mode, "GEMM mode")->check(CLI::IsMember(kModes));
  qr_cmd->add_option("--cutoff", qr.cutoff, "recursion cutoff (multiple of 32)")->check(CLI::PositiveNumber);
  qr_cmd->add_flag("--reorthogonalize", qr.reorthogonalize, "factorize Q a second time");
  bool qr_no_timing = false;
  qr_cmd->add_flag("--no-timing", qr_no_timing, "print NA instead of wall time");

  experiment::LlsOptions lls;
  CLI::App* lls_cmd = app.add_subcommand("lls", "solve min ||Ax - b|| and report optimality");
  std::string lls_family = "arithmetic";
  std::string lls_mode = "tc";
  std::string lls_solver = "cgls-pre";
  add_problem_flags(lls_cmd, lls.problem, lls_family);
  lls_cmd->add_option("--solver", lls_solver, "solver")->check(CLI::IsMember(kSolvers));
  lls_cmd->add_option("--mode", lls_mode, "GEMM mode of the QR factorization")->check(CLI::IsMember(kModes));
  lls_cmd->add_option("--cutoff", lls.cutoff, "recursion cutoff (multiple of 32)")->check(CLI::PositiveNumber);
  lls_cmd->add_option("--tol", lls.tolerance, "CGLS tolerance")->check(CLI::PositiveNumber);
  lls_cmd->add_option("--maxit", lls.max_iterations, "CGLS iteration cap")->check(CLI::PositiveNumber);
  bool lls_no_timing = false;
  lls_cmd->add_flag("--no-timing", lls_no_timing, "print NA instead of wall time");

  experiment::Problem gen;
  gen.n = 512;
  std::string gen_out;
  std::string gen_format = "bin";
  CLI::App* gen_cmd = app.add_subcommand("matgen", "write a generated matrix to a file");
  gen_cmd->add_option("--m", gen.m, "rows")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "columns")->check(CLI::PositiveNumber);
  std::string gen_family = "arithmetic";
  gen_cmd->add_option("--family", gen_family, "matrix family")->check(CLI::IsMember(kFamilies));
  double gen_cond = 1e4;
  gen_cmd->add_option("--cond", gen_cond, "condition number")->check(CLI::Range(1.0, 1e300));
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output path")->required();
  gen_cmd->add_option("--format", gen_format, "bin or csv")->check(CLI::IsMember({"bin", "csv"}));

  std::string conv_in;
  std::string conv_out;
  CLI::App* conv_cmd = app.add_subcommand("convert", "convert between .bin and .csv (chosen by extension)");
  conv_cmd->add_option("--input", conv_in, "source file")->required()->check(CLI::ExistingFile);
  conv_cmd->add_option("--out", conv_out, "destination file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (qr_cmd->parsed()) {
      qr.problem.family = *parse_family(qr_family);
      qr.mode = *experiment::parse_mode(qr_mode);
      qr.timing = !qr_no_timing;
      experiment::run_qr(qr, std::cout);
    } else if (lls_cmd->parsed()) {
      lls.problem.family = *parse_family(lls_family);
      lls.mode = *experiment::parse_mode(lls_mode);
      lls.solver = *experiment::parse_solver(lls_solver);
      lls.timing = !lls_no_timing;
      experiment::run_lls(lls, std::cout);
    } else if (gen_cmd->parsed()) {
      const Matrix<double> a = generate(gen.m, gen.n, SpectrumSpec{*parse_family(gen_family), gen_cond, gen.seed});
      if (gen_format == "csv") {
        io::write_csv(gen_out, a);
      } else {
        io::write_binary(gen_out, a);
      }
      if (a.cols() <= kConditionNumberLimit) {
        std::cout << "cond=" << io::format_double(condition_number(a.view())) << '\n';
      }
    } else if (conv_cmd->parsed()) {
      const Matrix<double> a = io::load_matrix(conv_in);
      if (conv_out.ends_with(".csv")) {
        io::write_csv(conv_out, a);
      } else {
        io::write_binary(conv_out, a);
      }
    }
  } catch (const mpqr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
