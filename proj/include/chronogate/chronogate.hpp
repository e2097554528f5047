// Copyright 2026 The ChronoGate Authors
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

#pragma once

// Umbrella header for the offline harness. The live HTTP adapters live in
// chronogate/net.hpp and are included separately by code that needs them.

#include "chronogate/agent.hpp"
#include "chronogate/cloze.hpp"
#include "chronogate/corpus.hpp"
#include "chronogate/date.hpp"
#include "chronogate/dct_search.hpp"
#include "chronogate/error.hpp"
#include "chronogate/metrics.hpp"
#include "chronogate/rng.hpp"
#include "chronogate/runner.hpp"
#include "chronogate/text.hpp"
