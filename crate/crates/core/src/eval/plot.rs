use std::collections::BTreeSet;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};

const WIDTH: u32 = 800;
const HEIGHT: u32 = 600;
const MARGIN: f64 = 24.0;
const LEGEND_WIDTH: u32 = 180;
const RADIUS: i64 = 3;
const MAX_LEGEND_ROWS: usize = 40;

const PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

/// 3x5 bitmap glyphs, one 3-bit row per entry, most significant bit left.
fn glyph(c: char) -> [u8; 5] {
    match c.to_ascii_lowercase() {
        'a' => [2, 5, 7, 5, 5],
        'b' => [6, 5, 6, 5, 6],
        'c' => [3, 4, 4, 4, 3],
        'd' => [6, 5, 5, 5, 6],
        'e' => [7, 4, 6, 4, 7],
        'f' => [7, 4, 6, 4, 4],
        'g' => [3, 4, 5, 5, 3],
        'h' => [5, 5, 7, 5, 5],
        'i' => [7, 2, 2, 2, 7],
        'j' => [1, 1, 1, 5, 2],
        'k' => [5, 5, 6, 5, 5],
        'l' => [4, 4, 4, 4, 7],
        'm' => [5, 7, 7, 5, 5],
        'n' => [6, 5, 5, 5, 5],
        'o' => [2, 5, 5, 5, 2],
        'p' => [6, 5, 6, 4, 4],
        'q' => [2, 5, 5, 6, 3],
        'r' => [6, 5, 6, 5, 5],
        's' => [3, 4, 2, 1, 6],
        't' => [7, 2, 2, 2, 2],
        'u' => [5, 5, 5, 5, 7],
        'v' => [5, 5, 5, 5, 2],
        'w' => [5, 5, 7, 7, 5],
        'x' => [5, 5, 2, 5, 5],
        'y' => [5, 5, 2, 2, 2],
        'z' => [7, 1, 2, 4, 7],
        '0' => [7, 5, 5, 5, 7],
        '1' => [2, 6, 2, 2, 7],
        '2' => [6, 1, 2, 4, 7],
        '3' => [6, 1, 2, 1, 6],
        '4' => [5, 5, 7, 1, 1],
        '5' => [7, 4, 6, 1, 6],
        '6' => [3, 4, 7, 5, 7],
        '7' => [7, 1, 2, 2, 2],
        '8' => [7, 5, 7, 5, 7],
        '9' => [7, 5, 7, 1, 6],
        '-' => [0, 0, 7, 0, 0],
        '_' => [0, 0, 0, 0, 7],
        '.' => [0, 0, 0, 0, 2],
        ':' => [0, 2, 0, 2, 0],
        _ => [0, 0, 0, 0, 0],
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn text(img: &mut RgbImage, x: i64, y: i64, s: &str, color: Rgb<u8>) {
    const SCALE: i64 = 2;
    for (k, c) in s.chars().enumerate() {
        let g = glyph(c);
        let ox = x + k as i64 * 4 * SCALE;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..3 {
                if bits & (4 >> col) != 0 {
                    for dy in 0..SCALE {
                        for dx in 0..SCALE {
                            put(img, ox + col * SCALE + dx, y + row as i64 * SCALE + dy, color);
                        }
                    }
                }
            }
        }
    }
}

/// Scatter plot of `points` colored by label, with a legend in label
/// order. The image depends only on the inputs.
pub fn render_plot(points: &[[f64; 2]], labels: &[String]) -> Result<RgbImage> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if points.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points for {} labels",
            points.len(),
            labels.len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coordinate".into()));
    }
    let distinct: Vec<&str> = labels
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let color_of = |l: &str| {
        let i = distinct.binary_search(&l).expect("label listed");
        Rgb(PALETTE[i % PALETTE.len()])
    };

    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let plot_w = (WIDTH - LEGEND_WIDTH) as f64 - 2.0 * MARGIN;
    let plot_h = HEIGHT as f64 - 2.0 * MARGIN;
    let range = |d: usize| {
        let lo = points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let (x0, xs) = range(0);
    let (y0, ys) = range(1);

    let axis = Rgb([200, 200, 200]);
    for x in MARGIN as i64..=(MARGIN + plot_w) as i64 {
        put(&mut img, x, (MARGIN + plot_h) as i64 + RADIUS + 2, axis);
    }
    for y in MARGIN as i64..=(MARGIN + plot_h) as i64 {
        put(&mut img, MARGIN as i64 - RADIUS - 2, y, axis);
    }

    for (p, l) in points.iter().zip(labels) {
        let cx = (MARGIN + (p[0] - x0) / xs * plot_w).round() as i64;
        // Image rows grow downwards.
        let cy = (MARGIN + (1.0 - (p[1] - y0) / ys) * plot_h).round() as i64;
        let color = color_of(l);
        for dy in -RADIUS..=RADIUS {
            for dx in -RADIUS..=RADIUS {
                if dx * dx + dy * dy <= RADIUS * RADIUS {
                    put(&mut img, cx + dx, cy + dy, color);
                }
            }
        }
    }

    let lx = (WIDTH - LEGEND_WIDTH + 8) as i64;
    for (row, l) in distinct.iter().take(MAX_LEGEND_ROWS).enumerate() {
        let y = MARGIN as i64 + row as i64 * 14;
        let color = color_of(l);
        for dy in 0..10 {
            for dx in 0..10 {
                put(&mut img, lx + dx, y + dy, color);
            }
        }
        let shown: String = l.chars().take(19).collect();
        text(&mut img, lx + 16, y, &shown, Rgb([0, 0, 0]));
    }
    Ok(img)
}

/// Writes the scatter plot as PNG.
pub fn emit_plot(points: &[[f64; 2]], labels: &[String], path: &Path) -> Result<()> {
    let img = render_plot(points, labels)?;
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    std::fs::write(path, bytes.into_inner()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn writes_a_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        emit_plot(&[[0.0, 0.0], [1.0, 2.0]], &labels(&["drugs", "sex"]), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"\x89PNG"));
    }

    #[test]
    fn identical_inputs_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let pts: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, (i * i % 17) as f64]).collect();
        let ls: Vec<String> = (0..50).map(|i| format!("c{}", i % 3)).collect();
        let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
        emit_plot(&pts, &ls, &a).unwrap();
        emit_plot(&pts, &ls, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot(&[], &[], &dir.path().join("e.png")).is_err());
        assert!(emit_plot(&[[0.0, 0.0]], &labels(&["a", "b"]), &dir.path().join("e.png")).is_err());
        let bad = dir.path().join("missing").join("x.png");
        assert!(matches!(
            emit_plot(&[[0.0, 0.0]], &labels(&["a"]), &bad),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn single_point_and_colors() {
        let img = render_plot(&[[3.0, 3.0]], &labels(&["only"])).unwrap();
        assert_eq!(img.dimensions(), (WIDTH, HEIGHT));
        let colored = img.pixels().filter(|p| p.0 == PALETTE[0]).count();
        // Marker plus legend swatch.
        assert!(colored > 100, "{colored}");
    }
}
