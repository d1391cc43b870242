#pragma once

// Monte Carlo quantiles of the Dickey-Fuller t distribution for the
// constant-only regression. Generated by tools/adf_table_gen.cpp
// (fixed seed 20240525); do not edit by hand.

namespace saelab::adf_tables {

inline constexpr int kNumProbs = 16;
inline constexpr int kNumSizes = 8;

inline constexpr double kProbs[kNumProbs] = {0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99};

inline constexpr double kSampleSizes[kNumSizes] = {25, 50, 100, 250, 500, 1000, 2500, 5000};

// kQuantiles[size][prob]
inline constexpr double kQuantiles[kNumSizes][kNumProbs] = {
    {-3.714661, -3.316511, -2.984863, -2.634186, -2.406303, -2.233709, -1.962229, -1.738667, -1.533707, -1.328286, -1.097421, -0.802572, -0.368966, -0.001171, 0.325103, 0.712388},
    {-3.568717, -3.212367, -2.920232, -2.596027, -2.386766, -2.224329, -1.965812, -1.750714, -1.551172, -1.347596, -1.122569, -0.835989, -0.408190, -0.043504, 0.281636, 0.660274},
    {-3.498716, -3.169053, -2.892595, -2.583628, -2.380881, -2.221054, -1.969065, -1.757035, -1.559548, -1.358391, -1.132823, -0.847776, -0.422537, -0.056684, 0.261513, 0.630686},
    {-3.461138, -3.138184, -2.872210, -2.571815, -2.372448, -2.217494, -1.969396, -1.758605, -1.561472, -1.362888, -1.140302, -0.856402, -0.435968, -0.068566, 0.246109, 0.615436},
    {-3.436847, -3.129177, -2.867924, -2.572776, -2.376255, -2.220608, -1.973221, -1.764684, -1.567968, -1.367449, -1.144900, -0.865142, -0.440493, -0.079837, 0.241658, 0.615219},
    {-3.448998, -3.131202, -2.865107, -2.567995, -2.371727, -2.219742, -1.970623, -1.762306, -1.567876, -1.369140, -1.147158, -0.865686, -0.441616, -0.079369, 0.241511, 0.611146},
    {-3.444116, -3.128728, -2.865391, -2.571359, -2.376137, -2.221186, -1.972792, -1.762436, -1.567588, -1.368368, -1.146890, -0.865771, -0.441377, -0.081527, 0.236321, 0.593856},
    {-3.437965, -3.125792, -2.861291, -2.566402, -2.370552, -2.216365, -1.970848, -1.761534, -1.566844, -1.367256, -1.145064, -0.864841, -0.441549, -0.082920, 0.237949, 0.603224},
};

}  // namespace saelab::adf_tables
