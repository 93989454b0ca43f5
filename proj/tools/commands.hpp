#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "auxiva/keyvalue.hpp"

namespace auxiva::cli {

/// Bad arguments or input files; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateArgs {
  std::string config;  // empty: default scenario
  std::string out;
  long seed = -1;      // overrides the config when >= 0
};

/// Separation settings are collected into a KeyValueFile (config file first,
/// explicit flags on top) and then validated in one place.
struct SeparateArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string report;
  KeyValueFile settings;
};

struct EvaluateArgs {
  std::string manifest;
  std::string estimates;
  std::string method = "estimate";
  std::string csv;
  std::string json;
  long segment_len = 32000;
};

struct DemoArgs {
  std::string out;
  std::string scenario;
  long seed = -1;
  long segment_len = 32000;
  int threads = 1;
};

struct BenchArgs {
  std::vector<int> channels{2, 4, 8};
  int frames = 200;
  int bins = 513;
  int threads = 1;
  std::string json;
};

int run_simulate(const SimulateArgs& args);
int run_separate(const SeparateArgs& args);
int run_evaluate(const EvaluateArgs& args);
int run_demo(const DemoArgs& args);
int run_bench(const BenchArgs& args);

}  // namespace auxiva::cli
