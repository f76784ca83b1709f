// Copyright (C) 2026 infaudio contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "infaudio/attention_profile.hpp"
#include "infaudio/denoiser.hpp"
#include "infaudio/error.hpp"
#include "infaudio/fifo_engine.hpp"
#include "infaudio/frame_stream.hpp"
#include "infaudio/gaussian_process.hpp"
#include "infaudio/gp_denoiser.hpp"
#include "infaudio/memory.hpp"
#include "infaudio/noise_schedule.hpp"
#include "infaudio/probes.hpp"
#include "infaudio/rng.hpp"
#include "infaudio/sampling_region.hpp"
#include "infaudio/timestep_plan.hpp"
