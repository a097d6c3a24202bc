// Copyright 2026 The edgevqc Authors
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

// Core library. The experiment grid lives in edgevqc/experiment.hpp and
// additionally needs yaml-cpp and a threads library.
#pragma once

#include "edgevqc/ansatz.hpp"
#include "edgevqc/data.hpp"
#include "edgevqc/gradient.hpp"
#include "edgevqc/metrics.hpp"
#include "edgevqc/optim.hpp"
#include "edgevqc/readout.hpp"
#include "edgevqc/rng.hpp"
#include "edgevqc/simplex.hpp"
#include "edgevqc/statevec.hpp"
#include "edgevqc/tempering.hpp"
#include "edgevqc/train.hpp"
