#pragma once

// Everything at once: the toy world, data pipeline, denoiser, losses,
// trainer and evaluation harness.

#include "bidpo/common.hpp"
#include "bidpo/datapipe/build.hpp"
#include "bidpo/datapipe/dataset_io.hpp"
#include "bidpo/datapipe/edit.hpp"
#include "bidpo/datapipe/grammar.hpp"
#include "bidpo/datapipe/pair.hpp"
#include "bidpo/datapipe/pipeline.hpp"
#include "bidpo/diffusion/sampler.hpp"
#include "bidpo/diffusion/schedule.hpp"
#include "bidpo/evalbench/ablation.hpp"
#include "bidpo/evalbench/evaluate.hpp"
#include "bidpo/evalbench/report.hpp"
#include "bidpo/io.hpp"
#include "bidpo/losses/losses.hpp"
#include "bidpo/net/checkpoint.hpp"
#include "bidpo/net/encoding.hpp"
#include "bidpo/net/mlp.hpp"
#include "bidpo/net/params.hpp"
#include "bidpo/toyworld/detect.hpp"
#include "bidpo/toyworld/png_export.hpp"
#include "bidpo/toyworld/region_mask.hpp"
#include "bidpo/toyworld/render.hpp"
#include "bidpo/toyworld/scene.hpp"
#include "bidpo/toyworld/vocab.hpp"
#include "bidpo/toyworld/vqa.hpp"
#include "bidpo/trainer/config.hpp"
#include "bidpo/trainer/trainer.hpp"
