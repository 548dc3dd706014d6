// SPDX-License-Identifier: Apache-2.0
//
// ricmimo - multi-cell Massive MIMO uplink under spatially correlated Rician fading
// Copyright (C) 2026 The ricmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RICMIMO_RICMIMO_HPP
#define RICMIMO_RICMIMO_HPP

#include "ricmimo/channel_model.hpp"
#include "ricmimo/common.hpp"
#include "ricmimo/estimation.hpp"
#include "ricmimo/experiments.hpp"
#include "ricmimo/monte_carlo.hpp"
#include "ricmimo/network.hpp"
#include "ricmimo/parallel.hpp"
#include "ricmimo/rng.hpp"
#include "ricmimo/se_closed_form.hpp"

#endif  // RICMIMO_RICMIMO_HPP
