#pragma once

#include <string>

#include "mwlab/grid.hpp"
#include "mwlab/weights.hpp"

namespace mwlab {

// .gfn container: one-line JSON header {d, L, n} followed by the cell-major
// little-endian float64 payload.
void write_gfn(const std::string& path, const GridFunction& f);
GridFunction read_gfn(const std::string& path);

// .mwt container: header {d, L, n, kind, params, seed} + n*n doubles per cell.
void write_mwt(const std::string& path, const MatrixWeight& w);
MatrixWeight read_mwt(const std::string& path);

}  // namespace mwlab
