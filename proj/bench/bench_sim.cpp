#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>

#include "bespoke/pipeline.hpp"
#include "bespoke/sim.hpp"
#include "bespoke/synth.hpp"

using namespace bespoke;

namespace
{

struct workload
{
  prepared_run run;
  netlist circuit;
  stimulus vectors;
};

/* The SVM-C fixture circuit on every sample of the dataset. */
workload const& fixture()
{
  static workload const w = [] {
    auto const c = load_config( std::filesystem::path( BESPOKE_FIXTURE_DIR ) / "redwine_svm_c.config.json" );
    auto p = prepare( c );
    auto n = gen_model_circuit( p.model, p.lib );
    auto rows = p.train_x;
    rows.insert( rows.end(), p.test_x.begin(), p.test_x.end() );
    auto s = feature_stimulus( rows );
    return workload{ std::move( p ), std::move( n ), std::move( s ) };
  }();
  return w;
}

void set_counters( benchmark::State& state )
{
  auto const& w = fixture();
  state.counters["gates"] = static_cast<double>( w.circuit.gates.size() );
  state.SetItemsProcessed( static_cast<std::int64_t>( state.iterations() * w.vectors.size() ) );
}

void simulate_serial_reference( benchmark::State& state )
{
  auto const& w = fixture();
  for ( auto _ : state )
    benchmark::DoNotOptimize( simulate_reference( w.circuit, w.run.lib, w.vectors ) );
  set_counters( state );
}

void simulate_bit_parallel( benchmark::State& state )
{
  auto const& w = fixture();
  auto const threads = static_cast<int>( state.range( 0 ) );
  for ( auto _ : state )
    benchmark::DoNotOptimize( simulate( w.circuit, w.run.lib, w.vectors, threads ) );
  set_counters( state );
}

void profile_serial_reference( benchmark::State& state )
{
  auto const& w = fixture();
  for ( auto _ : state )
    benchmark::DoNotOptimize( profile_reference( w.circuit, w.run.lib, w.vectors ) );
  set_counters( state );
}

void profile_bit_parallel( benchmark::State& state )
{
  auto const& w = fixture();
  auto const threads = static_cast<int>( state.range( 0 ) );
  for ( auto _ : state )
    benchmark::DoNotOptimize( profile( w.circuit, w.run.lib, w.vectors, threads ) );
  set_counters( state );
}

} // namespace

BENCHMARK( simulate_serial_reference )->Unit( benchmark::kMillisecond );
BENCHMARK( simulate_bit_parallel )->Arg( 1 )->Arg( 0 )->Unit( benchmark::kMillisecond );
BENCHMARK( profile_serial_reference )->Unit( benchmark::kMillisecond );
BENCHMARK( profile_bit_parallel )->Arg( 1 )->Arg( 0 )->Unit( benchmark::kMillisecond );

BENCHMARK_MAIN();
