//! Plain-text P3 pixmap rendering of database state grids.
//!
//! The format is dependency-free and byte-stable, which keeps golden-file
//! determinism tests trivial: same classification in, same bytes out.

use qpq::attack_nn::CellClass;

/// Dark red for known items.
const KNOWN: [u8; 3] = [139, 0, 0];
/// Grey for unknown items.
const UNKNOWN: [u8; 3] = [128, 128, 128];
/// Light palette cycled by almost-known-set id.
const AKS_PALETTE: [[u8; 3]; 12] = [
    [255, 179, 186],
    [255, 223, 186],
    [255, 255, 186],
    [186, 255, 201],
    [186, 225, 255],
    [218, 186, 255],
    [255, 186, 243],
    [201, 255, 229],
    [255, 240, 200],
    [200, 222, 255],
    [234, 255, 186],
    [255, 205, 220],
];

fn color(class: CellClass) -> [u8; 3] {
    match class {
        CellClass::Known => KNOWN,
        CellClass::Unknown => UNKNOWN,
        CellClass::Aks(id) => AKS_PALETTE[id as usize % AKS_PALETTE.len()],
    }
}

/// Renders a row-major classification as a plain P3 pixmap string.
pub fn render_grid(classes: &[CellClass], width: usize, height: usize) -> String {
    assert_eq!(classes.len(), width * height);
    let mut out = String::with_capacity(16 + classes.len() * 12);
    out.push_str(&format!("P3\n{width} {height}\n255\n"));
    for row in classes.chunks(width) {
        let line: Vec<String> = row
            .iter()
            .map(|&c| {
                let [r, g, b] = color(c);
                format!("{r} {g} {b}")
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_uniform_grids() {
        let grey = render_grid(&[CellClass::Unknown; 9], 3, 3);
        assert!(grey.starts_with("P3\n3 3\n255\n"));
        assert_eq!(grey.matches("128 128 128").count(), 9);

        let red = render_grid(&[CellClass::Known; 9], 3, 3);
        assert_eq!(red.matches("139 0 0").count(), 9);
    }

    #[test]
    fn palette_cycles_by_id() {
        let classes = [CellClass::Aks(0), CellClass::Aks(12), CellClass::Aks(5)];
        let img = render_grid(&classes, 3, 1);
        // ids 0 and 12 share a palette slot.
        assert_eq!(img.matches("255 179 186").count(), 2);
        assert_eq!(img.matches("218 186 255").count(), 1);
    }

    #[test]
    fn byte_identical_for_identical_input() {
        let classes: Vec<CellClass> = (0..16)
            .map(|i| match i % 3 {
                0 => CellClass::Known,
                1 => CellClass::Unknown,
                _ => CellClass::Aks(i as u32),
            })
            .collect();
        assert_eq!(render_grid(&classes, 4, 4), render_grid(&classes, 4, 4));
    }
}
