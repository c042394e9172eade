// Copyright 2026  The rnntcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "rnntcl/commands.hpp"

int main(int argc, char** argv) {
  using rnntcl::Command;
  CLI::App app{"rnntcl: toy transducer training with synthetic-data continual learning"};
  app.require_subcommand(1);

  rnntcl::CommandOptions opt;
  std::uint64_t seed = 0;
  std::string out;

  const std::map<std::string, std::pair<Command, std::string>> commands = {
      {"synth", {Command::kSynth, "Render templates x slot words with sampled voice profiles"}},
      {"pools", {Command::kPools, "Write seeded AIR and noise pools as WAV directories"}},
      {"corrupt-preview", {Command::kCorruptPreview, "Write corrupted variants of one WAV"}},
      {"features-dump", {Command::kFeaturesDump, "Dump stacked log-Mel features of one WAV"}},
      {"train", {Command::kTrain, "Run the configured stage recipe"}},
      {"decode", {Command::kDecode, "Greedy-decode every utterance of a manifest"}},
      {"eval", {Command::kEval, "WER (and NWER against a baseline report) on a manifest"}},
  };
  std::map<CLI::App*, Command> by_app;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", opt.config, "Run configuration file")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Override the output directory");
    switch (entry.first) {
      case Command::kCorruptPreview:
        sub->add_option("--input", opt.input, "Input WAV")->required();
        sub->add_option("--count", opt.count, "Number of variants");
        break;
      case Command::kFeaturesDump:
        sub->add_option("--input", opt.input, "Input WAV")->required();
        break;
      case Command::kTrain:
        sub->add_option("--resume", opt.resume, "Checkpoint to continue from");
        break;
      case Command::kDecode:
        sub->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
        sub->add_option("--input", opt.input, "Manifest to decode")->required();
        break;
      case Command::kEval:
        sub->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
        sub->add_option("--input", opt.input, "Manifest to score")->required();
        sub->add_option("--baseline", opt.baseline, "Baseline report for NWER");
        sub->add_option("--name", opt.name, "Report name (file <out>/<name>.report)");
        break;
      default:
        break;
    }
    by_app[sub] = entry.first;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : rnntcl::kExitConfig;
  }

  for (const auto& [sub, cmd] : by_app) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--out")) opt.out = out;
    return rnntcl::run_command(cmd, opt, std::cout, std::cerr);
  }
  return rnntcl::kExitConfig;
}
