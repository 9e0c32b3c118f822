// Copyright 2026 The corpusforge Authors.
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
//
// \file
// Everything in one include.

#pragma once

#include "corpusforge/align.hpp"
#include "corpusforge/audio.hpp"
#include "corpusforge/corpus.hpp"
#include "corpusforge/decode.hpp"
#include "corpusforge/error.hpp"
#include "corpusforge/gender.hpp"
#include "corpusforge/itn.hpp"
#include "corpusforge/lm.hpp"
#include "corpusforge/parallel.hpp"
#include "corpusforge/snr.hpp"
#include "corpusforge/speaker.hpp"
#include "corpusforge/text.hpp"
#include "corpusforge/vad.hpp"
#include "corpusforge/synthetic.hpp"
#include "corpusforge/pipeline.hpp"
