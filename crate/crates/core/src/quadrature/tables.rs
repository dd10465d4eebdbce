//! Octahedral orbit generators for the Lebedev rules.
//!
//! Each entry is `([x, y, z], weight)` with `x >= y >= z >= 0`; the full rule is the
//! orbit of each generator under coordinate permutations and sign flips. Weights sum to 4π.

pub(crate) const LEBEDEV_26: &[([f64; 3], f64)] = &[
    (
        [0.5773502691896257, 0.5773502691896257, 0.5773502691896257],
        0.4039190554615448,
    ),
    (
        [0.7071067811865476, 0.7071067811865476, 0.0],
        0.4787188805470161,
    ),
    ([1.0, 0.0, 0.0], 0.5983986006837702),
];

pub(crate) const LEBEDEV_86: &[([f64; 3], f64)] = &[
    (
        [0.5773502691896257, 0.5773502691896257, 0.5773502691896257],
        0.15009158815708187,
    ),
    (
        [0.6943540066026664, 0.6943540066026664, 0.18906355288539498],
        0.1492445168690702,
    ),
    (
        [0.8525183117012676, 0.3696028464541502, 0.3696028464541502],
        0.13961936079092707,
    ),
    (
        [0.9273306571511725, 0.3742430390903412, 0.0],
        0.1484377866929852,
    ),
    ([1.0, 0.0, 0.0], 0.14506632743848968),
];

pub(crate) const LEBEDEV_590: &[([f64; 3], f64)] = &[
    (
        [0.5773502691896257, 0.5773502691896257, 0.5773502691896257],
        0.023277689811090987,
    ),
    (
        [0.6372546939258752, 0.6372546939258752, 0.4333738687771544],
        0.023273280644847582,
    ),
    (
        [0.6807744066455244, 0.6807744066455244, 0.2703560883591648],
        0.023358527851253065,
    ),
    (
        [0.700768575373573, 0.5044419707800358, 0.5044419707800358],
        0.02320651712444717,
    ),
    (
        [0.7040954938227469, 0.7040954938227469, 0.09219040707689825],
        0.023521614885652412,
    ),
    (
        [0.7493106119041159, 0.561026380862206, 0.3518280927733519],
        0.02315814309130472,
    ),
    (
        [0.7803207424799203, 0.598412649788538, 0.1816640840360209],
        0.02324565639630277,
    ),
    (
        [0.791101929626902, 0.6116843442009876, 0.0],
        0.023337775889269885,
    ),
    (
        [0.8028368773352738, 0.4215761784010967, 0.4215761784010967],
        0.02285159031614609,
    ),
    (
        [0.8400474883590504, 0.474239284255198, 0.263471665593795],
        0.02265288026067282,
    ),
    (
        [0.8593798558907212, 0.5033564271075117, 0.08999205842074876],
        0.022647604818254626,
    ),
    (
        [0.8830787279341326, 0.3317920736472123, 0.3317920736472123],
        0.02198567789717927,
    ),
    (
        [0.9092134750923736, 0.3791035407695563, 0.1720795225656878],
        0.02153755923392349,
    ),
    (
        [0.918045287711454, 0.3964755348199858, 0.0],
        0.021427597073266094,
    ),
    (
        [0.9414141582204025, 0.2384736701421887, 0.2384736701421887],
        0.02032246835488661,
    ),
    (
        [0.9571020743100725, 0.2778673190586244, 0.08213021581932511],
        0.01954339052477729,
    ),
    (
        [0.9784805837626939, 0.1459036449157763, 0.1459036449157763],
        0.017401121296649277,
    ),
    (
        [0.9850133350280019, 0.1724782009907724, 0.0],
        0.016340324222732412,
    ),
    (
        [0.9962781297540164, 0.06095034115507196, 0.06095034115507196],
        0.012270220422136898,
    ),
    ([1.0, 0.0, 0.0], 0.003889444129321297),
];
