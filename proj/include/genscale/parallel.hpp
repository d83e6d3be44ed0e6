#pragma once

namespace genscale {

/// Selects between the OpenMP kernels and the serial reference loops.
/// Both paths produce bitwise-identical results; only wall time differs.
enum class Exec { serial, parallel };

}  // namespace genscale
