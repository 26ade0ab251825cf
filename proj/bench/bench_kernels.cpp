#include <benchmark/benchmark.h>

#include "speclab/empirical.hpp"
#include "speclab/funcalc.hpp"
#include "speclab/source.hpp"

using namespace speclab;

namespace {

const EigenSystem& torus() {
    static const EigenSystem sys = make_torus_system(2.0, 200000, true);
    return sys;
}

const SourceFunction& source() {
    static const SourceFunction f = make_source(torus(), {SourceStyle::exact_powerlaw, 1.0, 1.0, 4000});
    return f;
}

template <Eigen::MatrixXd (*Kernel)(const EigenSystem&, int, const SampleDesign&)>
void bm_kernel_matrix(benchmark::State& state) {
    const SampleDesign x = sample_design(torus(), state.range(0), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Kernel(torus(), 2, x));
    }
}

template <GramPack (*Build)(const EigenSystem&, const SourceFunction&, const SampleDesign&)>
void bm_build_gram(benchmark::State& state) {
    const SampleDesign x = sample_design(torus(), state.range(0), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Build(torus(), source(), x));
    }
}

template <ContourResult (*Contour)(const Eigen::MatrixXcd&, const FilterSpec&, FilterPart, double,
                                   const ContourPath&)>
void bm_matrix_filter_contour(benchmark::State& state) {
    const SampleDesign x = sample_design(torus(), state.range(0), 1);
    const Eigen::MatrixXcd a = kernel_matrix(torus(), 1, x).cast<cplx>() / static_cast<double>(state.range(0));
    const ContourPath path = build_contour(0.01, torus().kappa_sq(), 128);
    const FilterSpec f = make_gradient_flow();
    for (auto _ : state) {
        benchmark::DoNotOptimize(Contour(a, f, FilterPart::phi, 0.01, path));
    }
}

} // namespace

BENCHMARK(bm_kernel_matrix<kernel_matrix>)->Name("kernel_matrix/parallel")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_kernel_matrix<kernel_matrix_serial>)->Name("kernel_matrix/serial")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_build_gram<build_gram>)->Name("build_gram/parallel")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_build_gram<build_gram_serial>)->Name("build_gram/serial")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_matrix_filter_contour<matrix_filter_contour>)->Name("matrix_filter_contour/parallel")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_matrix_filter_contour<matrix_filter_contour_serial>)->Name("matrix_filter_contour/serial")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
