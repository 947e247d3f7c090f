//! Built-in scenarios sized to run on a desktop in minutes.

const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2cd", include_str!("../presets/fig2cd.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6a", include_str!("../presets/fig6a.toml")),
    ("fig6b", include_str!("../presets/fig6b.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8", include_str!("../presets/fig8.toml")),
    ("fig10", include_str!("../presets/fig10.toml")),
    ("fig11", include_str!("../presets/fig11.toml")),
    ("fig12", include_str!("../presets/fig12.toml")),
    ("fig13", include_str!("../presets/fig13.toml")),
    ("table1", include_str!("../presets/table1.toml")),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
