#pragma once

// Probe matrices with published quality figures, plus two small
// illustration matrices. The published values carry 9 significant digits,
// so rows are re-normalized on construction (changes losses by < 1e-7).

#include <cmath>

#include "llprobe/probe.hpp"

namespace llprobe::known_probes {

/// 4 x 3 probe used for the m = 4 phase of the full-oracle attack.
inline ProbeMatrix g4() {
    return ProbeMatrix::normalized(3, {
        3.17090802e-01, 6.03843391e-01, 7.90658068e-02,
        3.34653412e-01, 6.64893789e-01, 4.52799011e-04,
        4.44242183e-01, 5.42742523e-01, 1.30152938e-02,
        3.02254057e-01, 1.41415552e-01, 5.56330391e-01,
    });
}

/// 6 x 3 probe used for the m = 6 phase of the full-oracle attack.
inline ProbeMatrix g6() {
    return ProbeMatrix::normalized(3, {
        3.72716316e-13, 3.17270110e-06, 9.99996841e-01,
        4.03777185e-11, 2.98306441e-06, 9.99997020e-01,
        1.51235222e-11, 9.45069790e-02, 9.05493021e-01,
        7.54659835e-10, 6.77224932e-07, 9.99999344e-01,
        1.84318694e-09, 2.37398371e-01, 7.62601614e-01,
        9.75336131e-12, 1.44393380e-06, 9.99998569e-01,
    });
}

/// 4 x 3 probe designed for the fixed-subset attack.
inline ProbeMatrix subset_g4() {
    return ProbeMatrix::normalized(3, {
        3.34296189e-02, 6.06806998e-06, 9.66564298e-01,
        6.80901580e-15, 8.52564275e-02, 9.14743602e-01,
        1.78242549e-01, 2.03901175e-12, 8.21757436e-01,
        1.22676250e-02, 1.40922994e-03, 9.86323118e-01,
    });
}

/// Well-spread 4 x 3 matrix whose spectrum nonetheless has a collision
/// below 1e-4 (labelings {1,2,0,0} and {0,1,0,1}).
inline ProbeMatrix collision_example() {
    return ProbeMatrix::normalized(3, {
        0.53595382, 0.20743777, 0.25660840,
        0.76336402, 0.17982958, 0.05680643,
        0.83539897, 0.02825473, 0.13634628,
        0.88845736, 0.10858667, 0.00295598,
    });
}

/// 2 x 3 guesses whose loss under labeling {0, 1} is exactly 3 nats.
inline ProbeMatrix two_row_example() {
    const double a = std::exp(-2.0), b = std::exp(-1.0);
    const double d = std::exp(-8.0), e = std::exp(-4.0);
    return ProbeMatrix(3, {a, b, 1.0 - a - b, d, e, 1.0 - d - e});
}

} // namespace llprobe::known_probes
