#pragma once

#include <string>
#include <vector>

namespace compactflow {

struct PropertyResult {
    std::string name;
    double value = 0.0;      // measured defect
    double tolerance = 0.0;  // passes when value <= tolerance
    bool passed = false;
};

// Exactness and consistency checks that hold to round-off regardless of
// resolution: polynomial exactness of the derivative and operator stencils,
// affine metrics, discrete GCL with conservative metrics, mesh motion
// reproduction of translations and rotations, divergence of rigid rotation
// and bitwise repeatability of the solvers. Takes a few seconds.
std::vector<PropertyResult> run_property_suite();

}  // namespace compactflow
