#pragma once

#include <set>
#include <string>

#include "excon/types.hpp"

namespace excon {

// Instance-wise z-normalization: each channel is centered on its mean and
// scaled by its population standard deviation over the tau timestamps.
// Constant channels come back as all zeros. Throws DataError on non-finite
// entries (impute first).
MvtsInstance znormalize_instance(const MvtsInstance& instance);

// Fills missing entries (NaN) using the k donor channels with the highest
// absolute Pearson correlation to the target channel over co-observed
// timestamps (at least 3 required). Each gap becomes the |r|-weighted mean of
// the donors' z-scored values at that timestamp, mapped back through the
// target channel's observed mean/std. Channels with no qualifying donor fall
// back to linear interpolation; boundary gaps take the nearest observed value.
// Observed entries are never modified.
MvtsInstance impute_missing(const MvtsInstance& instance, std::size_t k);

// Keeps exactly the instances whose category is in `keep`, preserving order;
// classes are recomputed. Throws DataError when the result is empty.
LabeledDataset filter_label_categories(const LabeledDataset& data, const std::set<std::string>& keep);

// Convenience wrappers over whole datasets.
LabeledDataset znormalize_dataset(const LabeledDataset& data);
LabeledDataset impute_dataset(const LabeledDataset& data, std::size_t k);

}  // namespace excon
