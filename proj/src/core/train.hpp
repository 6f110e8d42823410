// Copyright 2026 The pasr Authors
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

#include "core/config.hpp"

#include <filesystem>
#include <string>

namespace pasr {

// lr = lr_scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
double noam_lr(const TrainConfig &cfg, int d_model, int step);

struct TrainResult {
    std::filesystem::path model_dir;
    int steps_done = 0;
    double final_loss = 0.0;
    int skipped_members = 0;  // CTC-impossible samples dropped from batches
};

// Trains one variant ("baseline" trains on raw features, "proposed" adds the
// future-masking augmentation; nothing else differs, including the parameter
// init) and writes model.pasr, model.json, train_log.jsonl, config.json and
// run_manifest.json into out_dir. A non-finite loss or update aborts with a
// numeric error after saving the last finite checkpoint.
TrainResult train_model(const ExperimentConfig &cfg, const std::filesystem::path &corpus_dir,
                        const std::string &variant, const std::filesystem::path &out_dir,
                        bool force);

}  // namespace pasr
