//! Bundled run configurations, one per figure.

macro_rules! presets {
    ($($id:literal),* $(,)?) => {
        /// `(id, JSON)` pairs in figure order.
        pub const PRESETS: &[(&str, &str)] = &[$(($id, include_str!(concat!("../presets/", $id, ".json")))),*];
    };
}

presets!(
    "fig01", "fig02", "fig03", "fig04", "fig05", "fig06", "fig07", "fig08", "fig09", "fig10",
    "fig11", "fig12", "fig13", "fig14", "fig15", "fig16",
);

pub fn preset(id: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(k, _)| *k == id).map(|(_, v)| *v)
}
