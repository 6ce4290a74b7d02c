#pragma once

#include <cstddef>
#include <vector>

namespace swapnet::scratch {

// High-water mark of the largest single transient buffer requested by a
// kernel since the last reset. Used to compare algorithm memory footprints.
void reset_peak() noexcept;
std::size_t peak_elements() noexcept;
void note_allocation(std::size_t elements) noexcept;

template <typename T>
std::vector<T> buffer(std::size_t elements) {
  note_allocation(elements);
  return std::vector<T>(elements);
}

}  // namespace swapnet::scratch
