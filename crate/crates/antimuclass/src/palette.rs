//! Display colors for label maps.

use antimuclass_core::{LabelMap, UNKNOWN, UNLABELED};

use crate::error::{Error, Result};
use crate::pnm::ppm_bytes;

const BASE: [[u8; 3]; 12] = [
    [0, 40, 140],    // deep water
    [70, 160, 230],  // shallow water
    [240, 220, 150], // sand
    [30, 110, 40],   // forest
    [120, 200, 80],  // grass
    [200, 60, 40],   // dense urban
    [240, 150, 120], // sparse urban
    [140, 100, 60],  // bare soil
    [230, 230, 60],  // crops
    [110, 110, 110], // rock
    [170, 90, 200],  // wetland
    [0, 170, 160],   // salt flat
];

/// One color per class plus the unlabeled and unknown colors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    pub classes: Vec<[u8; 3]>,
    pub unlabeled: [u8; 3],
    pub unknown: [u8; 3],
}

impl Palette {
    /// The 12 base colors, extended with generated hues for `K > 12`.
    pub fn for_classes(class_count: usize) -> Self {
        let mut classes: Vec<[u8; 3]> = BASE.iter().copied().take(class_count).collect();
        let mut h = 0.0f64;
        while classes.len() < class_count {
            h = (h + 0.618_033_988_749_895) % 1.0;
            let c = hue(h);
            if !classes.contains(&c) {
                classes.push(c);
            }
        }
        Palette { classes, unlabeled: [0, 0, 0], unknown: [255, 255, 255] }
    }

    pub fn color(&self, label: u16) -> Result<[u8; 3]> {
        match label {
            UNKNOWN => Ok(self.unknown),
            UNLABELED => Ok(self.unlabeled),
            l => self
                .classes
                .get(l as usize - 1)
                .copied()
                .ok_or_else(|| Error::Render(format!("label {l} has no palette entry ({} classes)", self.classes.len()))),
        }
    }
}

fn hue(h: f64) -> [u8; 3] {
    let x = |o: f64| {
        let t = ((h + o) * 6.0) % 6.0;
        let v = (t - 3.0).abs() - 1.0;
        (v.clamp(0.0, 1.0) * 200.0 + 30.0) as u8
    };
    [x(0.0), x(2.0 / 3.0), x(1.0 / 3.0)]
}

/// P6 pixmap of `labels`.
pub fn render_labels(labels: &LabelMap, palette: &Palette) -> Result<Vec<u8>> {
    let rgb = labels.labels.iter().map(|&l| palette.color(l)).collect::<Result<Vec<_>>>()?;
    Ok(ppm_bytes(labels.width, labels.height, &rgb))
}
