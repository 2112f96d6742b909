// emovec/emovec.hpp

// Copyright 2026  emovec authors
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

#include "emovec/audio_io.hpp"
#include "emovec/config.hpp"
#include "emovec/core.hpp"
#include "emovec/eval.hpp"
#include "emovec/features.hpp"
#include "emovec/frontend.hpp"
#include "emovec/gmm.hpp"
#include "emovec/pipeline.hpp"
#include "emovec/reference.hpp"
#include "emovec/serialize.hpp"
#include "emovec/svm.hpp"
