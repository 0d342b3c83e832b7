#pragma once

#include <string>

#include "scanet/model.hpp"

namespace scanet {

// Counting convention, echoed in every report: one multiply-accumulate = 2
// FLOPs; convolution bias adds are excluded; batch norm counted as a fused
// scale-and-shift (2/elem); sigmoid 4/elem; bilinear up-sample 11/elem.
extern const char* kFlopConvention;

// Analytic cost of one single-image forward pass at the configured
// resolution (eval mode), accumulated over a real shape-faithful forward.
unsigned long long count_flops(const ScanetConfig& cfg);

}  // namespace scanet
