#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanet/image.hpp"
#include "scanet/params.hpp"
#include "scanet/tensor.hpp"

namespace scanet {

// One prepared training sample: image normalized to [-0.5, 0.5], binary mask.
struct Sample {
    Tensor image;  // 1 x 3 x H x H
    Tensor mask;   // 1 x 1 x H x H, values in {0, 1}
    std::string id;
    bool night = false;
};

// Patch-classification sample for backbone pre-training. positive means
// cloud fraction > 0.8, negative < 0.2; anything between is never emitted.
struct PatchSample {
    Tensor patch;  // 1 x 3 x H/4 x H/4
    bool positive = false;
    double rate = 0.0;  // cloud pixels / patch pixels
};

struct DatasetPair {
    std::string image_path;
    std::string mask_path;
    std::string stem;
    bool night = false;
};

// Deterministic 9:1 split (test size = floor(total/10)); train and test are
// disjoint and cover every pair exactly once.
struct DatasetIndex {
    std::vector<DatasetPair> train;
    std::vector<DatasetPair> test;
    uint64_t seed = 0;
};

// Scans root/images and root/GTmaps, matches files by stem, shuffles by seed
// and splits 9:1. Stems starting with night_prefix are tagged night.
DatasetIndex load_dataset(const std::string& root, uint64_t seed,
                          const std::string& night_prefix = "night");

// Decode, resize to target_size (bilinear image / nearest mask), optional
// seeded 50% horizontal + 50% vertical flips applied to both, then scale to
// [0,1] and subtract 0.5 per channel. Mask binarized at >= 128.
Sample prepare(const DatasetPair& pair, int target_size, bool augment, Rng& rng);

// Tensor-level flips shared by the file and synthetic paths.
void apply_flips(Sample& s, bool horizontal, bool vertical);

// Non-overlapping 4x4 patch grid; patches with cloud rate in [0.2, 0.8] are
// omitted. H must be divisible by 4.
std::vector<PatchSample> swpt_extract(const Tensor& image, const Tensor& mask);

// Procedural sky/cloud scenes (multi-octave value noise, 25-75% cloud
// cover), deterministic by seed; every mask contains both classes.
std::vector<Sample> synth_generate(int count, int size, uint64_t seed);

// Writes samples in the ingestion layout (images/*.ppm, GTmaps/*.pgm).
void export_dataset(const std::vector<Sample>& samples, const std::string& root);

// u8 views of a sample, for writers and the CLI.
ImageU8 image_to_u8(const Tensor& image);  // de-normalizes a 1x3xHxW image
ImageU8 mask_to_u8(const Tensor& mask, float threshold = 0.5f);  // {0,255}
ImageU8 prob_map_to_u8(const Tensor& map);  // grayscale scaled from (0,1)

// Bilinear resample of a float map to an arbitrary size (half-pixel
// centers); used to bring predictions back to the source resolution.
Tensor resize_map_bilinear(const Tensor& map, int out_h, int out_w);

}  // namespace scanet
