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

// Umbrella header for the library (the command line lives in mvcl/cli.hpp).

#pragma once

#include "mvcl/autodiff/adam.hpp"
#include "mvcl/autodiff/gradcheck.hpp"
#include "mvcl/autodiff/ops.hpp"
#include "mvcl/autodiff/parameter_store.hpp"
#include "mvcl/autodiff/tape.hpp"
#include "mvcl/autodiff/tensor.hpp"
#include "mvcl/checkpoint.hpp"
#include "mvcl/config.hpp"
#include "mvcl/contrastive.hpp"
#include "mvcl/corpus.hpp"
#include "mvcl/diagnostics.hpp"
#include "mvcl/encoder.hpp"
#include "mvcl/errors.hpp"
#include "mvcl/evalkit.hpp"
#include "mvcl/indicator.hpp"
#include "mvcl/jsonl.hpp"
#include "mvcl/matcher.hpp"
#include "mvcl/model.hpp"
#include "mvcl/ranker.hpp"
#include "mvcl/recurrent.hpp"
#include "mvcl/rng.hpp"
#include "mvcl/synthetic.hpp"
#include "mvcl/trainer.hpp"
