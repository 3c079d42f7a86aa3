// Copyright 2026 The MVCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes the synthetic loan corpus as JSONL files for the command-line tool:
// cases.jsonl, train/validation/test.jsonl, elements.jsonl and
// sentence_examples.jsonl.

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "mvcl/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s OUT_DIR [TRAIN_TRIPLES] [SEED]\n", argv[0]);
    return 1;
  }
  mvcl::SyntheticConfig config;
  config.train_triples = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 64;
  config.validation_triples = config.train_triples / 4;
  config.test_triples = config.train_triples / 4;
  config.seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1;
  const std::filesystem::path out = argv[1];
  std::filesystem::create_directories(out);
  mvcl::write_synthetic(out, mvcl::make_loan_corpus(config));
  std::printf("wrote %zu train triples to %s\n", config.train_triples, out.string().c_str());
  return 0;
}
