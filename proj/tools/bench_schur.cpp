// Schur-complement assembly: OpenMP kernel vs the dense serial reference, on
// the relaxations the solver actually sees.
//
//   bench_schur --benchmark_filter=ratex

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "ratopt/relaxation.hpp"
#include "ratopt/schur.hpp"

using namespace ratopt;

namespace {

Polynomial X(std::size_t n, std::size_t j) { return Polynomial::variable(n, j); }
Polynomial C(std::size_t n, double v) { return Polynomial::constant(n, v); }

// Three-term sparse example, dense relaxation at order k.
SDPProblem sparse4_dense(int k) {
  RationalProgram p;
  p.n = 4;
  for (int i = 1; i <= 3; ++i) {
    p.terms.emplace_back(X(4, 0) * X(4, i), C(4, 1));
    p.constraints.push_back({C(4, i) - X(4, 0) * X(4, 0) - X(4, i) * X(4, i)});
  }
  return build_dense(p, k).problem;
}

// Ten bivariate degree-8 terms: many medium blocks.
SDPProblem ten_terms(int k) {
  RationalProgram p;
  p.n = 2;
  const auto x = X(2, 0), y = X(2, 1);
  for (int i = 1; i <= 10; ++i) {
    const auto a = x * x * x * x + y * y + C(2, 2.0 * i);
    const auto b = x * x + x * x * y * y + y * y * y * y + C(2, 1.0 * i * i);
    p.terms.emplace_back((x + y) * b - (i * y * y + C(2, 1)) * a, a * b);
  }
  p.constraints.push_back({C(2, 1) - x * x});
  p.constraints.push_back({C(2, 1) - y * y});
  return build_dense(p, k).problem;
}

struct Fixture {
  SDPProblem problem;
  SchurLayout layout;
  std::vector<SchurBlockData> data;
  std::vector<Eigen::MatrixXd> X, S_inv;

  explicit Fixture(SDPProblem p) : problem(std::move(p)) {
    layout = SchurLayout::from_problem(problem);
    data = SchurBlockData::from_problem(problem);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> N;
    for (const auto& b : problem.blocks) {
      for (auto* target : {&X, &S_inv}) {
        Eigen::MatrixXd g(b.size, b.size);
        for (int i = 0; i < b.size; ++i)
          for (int j = 0; j < b.size; ++j) g(i, j) = N(rng);
        target->push_back(g * g.transpose() + Eigen::MatrixXd::Identity(b.size, b.size));
      }
    }
  }

  std::vector<Eigen::MatrixXd> zeros() const {
    std::vector<Eigen::MatrixXd> H;
    for (const auto& m : layout.members) H.push_back(Eigen::MatrixXd::Zero(m.size(), m.size()));
    return H;
  }
};

const Fixture& fixture(int which) {
  static const Fixture small(sparse4_dense(3));
  static const Fixture large(ten_terms(6));
  return which == 0 ? small : large;
}

const char* name(int which) { return which == 0 ? "sparse4_k3" : "ratex_k6"; }

void BM_Reference(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  state.SetLabel(name(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    auto H = f.zeros();
    assemble_schur_reference(f.problem, f.layout, f.X, f.S_inv, H);
    benchmark::DoNotOptimize(H.data());
  }
}

// range(1): thread count handed to OpenMP.
void BM_Kernel(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const int threads = static_cast<int>(state.range(1));
  state.SetLabel(std::string(name(static_cast<int>(state.range(0)))) + " threads=" + std::to_string(threads));
  omp_set_num_threads(threads);
  for (auto _ : state) {
    auto H = f.zeros();
    assemble_schur(f.data, f.layout, f.X, f.S_inv, H);
    benchmark::DoNotOptimize(H.data());
  }
}

void kernel_args(benchmark::internal::Benchmark* b) {
  const int max_threads = omp_get_max_threads();
  for (int w : {0, 1}) {
    for (int t = 1; t <= max_threads; t *= 2) b->Args({w, t});
    if ((max_threads & (max_threads - 1)) != 0) b->Args({w, max_threads});
  }
}

}  // namespace

BENCHMARK(BM_Reference)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Kernel)->Apply(kernel_args)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
