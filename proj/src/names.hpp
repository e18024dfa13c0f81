#pragma once

#include <span>

namespace khop {

// Single-token person-name pools. The filler pool is reserved for top-layer
// profile objects and never overlaps the entity pool.
std::span<const char* const> entity_namespace();
std::span<const char* const> filler_namespace();
std::span<const char* const> relation_namespace();

} // namespace khop
