#pragma once

// Rational minimax approximations for the standard normal quantile,
// fitted on Chebyshev grids against a 200-bit reference. Regions:
//   central : z = r * P(xi)/Q(xi),  xi = sa*r^2 + sb,  |u - 1/2| <= 0.425
//   tailA   : z = -P(xi)/Q(xi),     xi = sa*s + sb,    s = sqrt(-ln q) in [1.60, 3.40]
//   tailB   :                                          s in [3.38, 5.02]
//   tailC   :                                          s in [4.98, 6.55]
// with q = min(u, 1-u). Max relative error ~2e-13 over the uniform grid
// (2m+1)/2^53. Evaluation order (Horner with fma) is part of the
// reproducibility contract; scalar and SIMD paths share it.

namespace mlsa::rng::detail {

inline constexpr double kCentralSa = 11.07266435986159;
inline constexpr double kCentralSb = -1.0;
inline constexpr double kCentralP[] = {
    2.8067362499054034,
    -0.3946849358547193,
    -0.5248785531534952,
    -0.4806358811491162,
    -0.13743086999488785,
    0.40092759540888845,
    -0.12841588012580868,
    0.011598142766819199,
    -0.00016214202176940588};
inline constexpr double kCentralQ[] = {
    1.0,
    -0.2779296983841083,
    -0.19034714267888903,
    -0.14927473386513476,
    -0.022813775791382336,
    0.1540374109251822,
    -0.06291321531084627,
    0.008006968286618218,
    -0.00025007609451848176};

inline constexpr double kTailASa = 1.1111111111111112;
inline constexpr double kTailASb = -2.777777777777778;
inline constexpr double kTailAP[] = {
    2.8893078995302828,
    0.3688372878995421,
    -0.34702449301069554,
    0.34255752023256947,
    -0.1732681791572223,
    -0.24550531160740943,
    -0.061353661163750545,
    -0.004369106161942624};
inline constexpr double kTailAQ[] = {
    1.0,
    -0.3620496165831346,
    0.06989644234077057,
    0.07622758610002743,
    -0.09413694916405163,
    -0.03880647453078206,
    -0.003428019898326355,
    -1.4863837072254412e-07};

inline constexpr double kTailBSa = 1.2195121951219514;
inline constexpr double kTailBSb = -5.121951219512195;
inline constexpr double kTailBP[] = {
    5.47537276893332,
    0.04160890386248919,
    -0.01011404583271258,
    0.005087302068583472,
    -0.00893401446004747,
    0.016055077340730906,
    0.004781901795219562,
    0.00032602703902029443};
inline constexpr double kTailBQ[] = {
    1.0,
    -0.215154645465396,
    0.047712632827309795,
    -0.010308079149344562,
    0.0008397809255758424,
    0.0027000542778092764,
    0.0002806008216687646,
    1.5236886598141206e-08};

inline constexpr double kTailCSa = 1.2738853503184717;
inline constexpr double kTailCSb = -7.343949044585991;
inline constexpr double kTailCP[] = {
    7.778056774762985,
    0.019411837086373382,
    -0.004677431155438356,
    0.008155376977642053,
    -0.021801141841311898,
    -0.004078079968240475,
    -0.0001852652683779173};
inline constexpr double kTailCQ[] = {
    1.0,
    -0.1447535196379644,
    0.021197526158408458,
    -0.00219750914394949,
    -0.0024548052336881066,
    -0.00016672958459397957,
    -2.8975479691918934e-09};

}  // namespace mlsa::rng::detail
