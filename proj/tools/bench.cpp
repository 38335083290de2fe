// Benchmark of the parallel kernels against their serial references: the
// exhaustive plan enumeration (OpenMP over the combination space vs a plain
// loop) and the branch-and-bound batch loop at one and several workers.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "decnet/instance.hpp"
#include "decnet/oracle.hpp"
#include "decnet/solver.hpp"

using namespace decnet;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  int n = 7;
  std::uint64_t seed = 21;
  int threads = omp_get_max_threads();
  int repeats = 3;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--nodes") && i + 1 < argc)
      n = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc)
      seed = std::strtoull(argv[++i], nullptr, 10);
    else if (!std::strcmp(argv[i], "--threads") && i + 1 < argc)
      threads = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--repeats") && i + 1 < argc)
      repeats = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr,
                   "usage: %s [--nodes N] [--seed S] [--threads T] [--repeats R]\n",
                   argv[0]);
      return 2;
    }
  }

  GenSpec gs;
  gs.n = n;
  gs.seed = seed;
  Instance inst = generate_instance(gs);
  std::printf("instance: %d nodes, %d arcs, seed %llu, %d thread(s)\n",
              inst.node_count, inst.arc_count(),
              static_cast<unsigned long long>(seed), threads);

  double t_serial = 1e300, t_par = 1e300;
  OracleResult ref, par;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    ref = enumerate_exact_serial(inst, {});
    t_serial = std::min(t_serial, seconds_since(t0));

    OracleOptions oo;
    oo.threads = threads;
    t0 = std::chrono::steady_clock::now();
    par = enumerate_exact(inst, oo);
    t_par = std::min(t_par, seconds_since(t0));
  }
  bool same = ref.feasible == par.feasible && ref.objective == par.objective;
  std::printf("enumeration  serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n",
              t_serial, t_par, t_serial / t_par,
              same ? "results match" : "RESULTS DIFFER");

  SolveOptions one;
  one.formulation.renovation_binary = true;
  one.threads = 1;
  SolveOptions many = one;
  many.threads = threads;

  double t_one = 1e300, t_many = 1e300;
  SolveResult s1, sm;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    s1 = solve(inst, one);
    t_one = std::min(t_one, seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    sm = solve(inst, many);
    t_many = std::min(t_many, seconds_since(t0));
  }
  bool agree = s1.status == sm.status &&
               std::abs(s1.objective - sm.objective) <=
                   1e-9 * std::max(1.0, std::abs(s1.objective));
  std::printf("search       1 worker %7.3fs  %d workers %6.3fs  speedup %5.2fx  %s\n",
              t_one, threads, t_many, t_one / t_many,
              agree ? "results match" : "RESULTS DIFFER");
  return same && agree ? 0 : 1;
}
