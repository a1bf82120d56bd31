#pragma once

#include <optional>
#include <string>

#include "cosguide/modal.hpp"

namespace cosguide {

/// Binary per-wavenumber cache of CellScattering results, keyed by the
/// profile signature and solver truncation, so interrupted sweeps resume
/// with bit-identical matrices.
class ScatteringCache {
public:
    explicit ScatteringCache(std::string dir); // creates the directory

    std::string key(const std::string& profile_sig, double k, int n_evan, int n_slices) const;

    std::optional<CellScattering> load(const std::string& profile_sig, double k, int n_evan,
                                       int n_slices) const;
    void store(const std::string& profile_sig, const CellScattering& cell) const;

private:
    std::string path_for(const std::string& key) const;
    std::string dir_;
};

} // namespace cosguide
