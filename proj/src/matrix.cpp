#include "taskfft/matrix.hpp"

namespace taskfft {

std::string to_string(const Extents& e) {
  return std::to_string(e.rows) + "x" + std::to_string(e.cols);
}

std::vector<SlabPartition> slab_partition(std::size_t rows, std::size_t n_locs) {
  if (n_locs == 0) throw PartitionError("cannot partition rows across zero localities");
  if (rows % n_locs != 0) {
    throw PartitionError(std::to_string(rows) + " rows are not divisible into " +
                         std::to_string(n_locs) + " equal slabs");
  }
  const std::size_t per = rows / n_locs;
  std::vector<SlabPartition> out;
  out.reserve(n_locs);
  for (std::size_t r = 0; r < n_locs; ++r) {
    out.push_back({LocalityId{r}, RowRange{r * per, (r + 1) * per}});
  }
  return out;
}

std::vector<RowRange> bundle_rows(std::size_t rows, std::size_t bundle) {
  if (bundle == 0) throw ConfigurationError("task bundle must be >= 1 row");
  std::vector<RowRange> out;
  out.reserve((rows + bundle - 1) / bundle);
  for (std::size_t b = 0; b < rows; b += bundle) out.push_back({b, std::min(rows, b + bundle)});
  return out;
}

}  // namespace taskfft
