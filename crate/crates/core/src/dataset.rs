//! KITTI-format ingestion and synthetic scene generation.
//!
//! Real data follows the KITTI object-detection layout: `calib/<id>.txt`
//! with P2/P3 projection matrices, `label_2/<id>.txt` with 15-field
//! annotation lines, and `disp/<id>.png` (16-bit, disparity = raw/256) or
//! `disp/<id>.pfm` (float32) disparity maps. Synthetic scenes plant
//! constant-disparity rectangles whose extents equal the camera
//! projection of the object model, so ground truth and the proposer's
//! size lookup agree by construction; they serialize to the same layout.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::{project_model, CameraIntrinsics, ObjectModel};
use crate::error::{DswError, Result};
use crate::proposer::DisparityImage;

/// KITTI 4-level occlusion code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occlusion {
    FullyVisible,
    Partly,
    Largely,
    Unknown,
}

impl Occlusion {
    /// Maps the integer code from a label line; out-of-range codes read as
    /// unknown rather than failing the line.
    pub fn from_kitti(code: i64) -> Self {
        match code {
            0 => Occlusion::FullyVisible,
            1 => Occlusion::Partly,
            2 => Occlusion::Largely,
            _ => Occlusion::Unknown,
        }
    }

    pub fn as_kitti(self) -> i64 {
        match self {
            Occlusion::FullyVisible => 0,
            Occlusion::Partly => 1,
            Occlusion::Largely => 2,
            Occlusion::Unknown => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Occlusion::FullyVisible => "fully_visible",
            Occlusion::Partly => "partly",
            Occlusion::Largely => "largely",
            Occlusion::Unknown => "unknown",
        }
    }

    pub const ALL: [Occlusion; 4] = [
        Occlusion::FullyVisible,
        Occlusion::Partly,
        Occlusion::Largely,
        Occlusion::Unknown,
    ];
}

/// One annotated object: top-left corner plus size, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub class_name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub occlusion: Occlusion,
    pub truncation: f64,
}

/// Everything needed to evaluate one image.
#[derive(Debug, Clone)]
pub struct Scene {
    pub image_id: String,
    pub disparity: DisparityImage,
    pub ground_truth: Vec<GroundTruthBox>,
    pub intrinsics: CameraIntrinsics,
}

fn matrix_row(content: &str, key: &str) -> Result<Vec<f64>> {
    let line = content
        .lines()
        .find(|l| l.trim_start().starts_with(key))
        .ok_or_else(|| DswError::MalformedCalib(format!("missing {} line", key)))?;
    let rest = line.trim_start().strip_prefix(key).unwrap_or("");
    let vals: Vec<f64> = rest
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| DswError::MalformedCalib(format!("bad float {:?} in {}", t, key)))
        })
        .collect::<Result<_>>()?;
    if vals.len() != 12 {
        return Err(DswError::MalformedCalib(format!(
            "{} has {} values, expected 12",
            key,
            vals.len()
        )));
    }
    Ok(vals)
}

/// Parses KITTI calibration text: intrinsics from P2, stereo baseline from
/// the P2/P3 horizontal translations (left/right color cameras — the pair
/// the 2D labels are expressed in).
pub fn parse_calibration(content: &str) -> Result<CameraIntrinsics> {
    let p2 = matrix_row(content, "P2:")?;
    let p3 = matrix_row(content, "P3:")?;
    let fx = p2[0];
    if !(fx.is_finite() && fx > 0.0) {
        return Err(DswError::MalformedCalib(format!(
            "P2 focal {} not positive",
            fx
        )));
    }
    let baseline = (p2[3] - p3[3]) / fx;
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(DswError::NonPositiveBaseline(baseline));
    }
    let intr = CameraIntrinsics {
        fx,
        fy: p2[5],
        cx: p2[2],
        cy: p2[6],
        skew: p2[1],
        baseline,
    };
    intr.validate()
        .map_err(|e| DswError::MalformedCalib(e.to_string()))?;
    Ok(intr)
}

/// Renders intrinsics back to P2/P3 lines. Floats print in Rust's shortest
/// round-trip form, so parse(format(x)) is exact.
pub fn format_calibration(intr: &CameraIntrinsics) -> String {
    let p2 = format!(
        "P2: {} {} {} 0 0 {} {} 0 0 0 1 0",
        intr.fx, intr.skew, intr.cx, intr.fy, intr.cy
    );
    let p3 = format!(
        "P3: {} {} {} {} 0 {} {} 0 0 0 1 0",
        intr.fx,
        intr.skew,
        intr.cx,
        -intr.fx * intr.baseline,
        intr.fy,
        intr.cy
    );
    format!("{}\n{}\n", p2, p3)
}

/// Parses KITTI label lines. `class_filter` keeps only exact (case-sensitive)
/// class matches; empty keeps everything. Malformed lines are counted and
/// skipped, never fatal — returns (boxes, malformed_line_count).
pub fn parse_labels(content: &str, class_filter: &str) -> (Vec<GroundTruthBox>, usize) {
    let mut boxes = Vec::new();
    let mut malformed = 0usize;
    for line in content.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let parsed = (|| -> Option<GroundTruthBox> {
            if fields.len() < 15 {
                return None;
            }
            let truncation: f64 = fields[1].parse().ok()?;
            let occ_code: i64 = fields[2].parse().ok()?;
            let x1: f64 = fields[4].parse().ok()?;
            let y1: f64 = fields[5].parse().ok()?;
            let x2: f64 = fields[6].parse().ok()?;
            let y2: f64 = fields[7].parse().ok()?;
            let (w, h) = (x2 - x1, y2 - y1);
            if !(w > 0.0 && h > 0.0) {
                return None;
            }
            Some(GroundTruthBox {
                class_name: fields[0].to_string(),
                x: x1,
                y: y1,
                w,
                h,
                occlusion: Occlusion::from_kitti(occ_code),
                truncation,
            })
        })();
        match parsed {
            Some(b) => {
                if class_filter.is_empty() || b.class_name == class_filter {
                    boxes.push(b);
                }
            }
            None => malformed += 1,
        }
    }
    (boxes, malformed)
}

/// Renders boxes as KITTI label lines (alpha and 3D fields filled with the
/// dataset's don't-care sentinels). Corner floats print in round-trip form
/// so parse_labels recovers the boxes exactly.
pub fn format_labels(boxes: &[GroundTruthBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&format!(
            "{} {} {} -10 {} {} {} {} -1 -1 -1 -1000 -1000 -1000 -10\n",
            b.class_name,
            b.truncation,
            b.occlusion.as_kitti(),
            b.x,
            b.y,
            b.x + b.w,
            b.y + b.h
        ));
    }
    out
}

fn check_dims(img: &DisparityImage, expected: Option<(u32, u32)>) -> Result<()> {
    if let Some((w, h)) = expected {
        if (img.width(), img.height()) != (w, h) {
            return Err(DswError::DimensionMismatch {
                expected_w: w,
                expected_h: h,
                got_w: img.width(),
                got_h: img.height(),
            });
        }
    }
    Ok(())
}

/// Loads a disparity map, dispatching on extension: `.png` (16-bit
/// grayscale, disparity = raw/256, raw 0 invalid) or `.pfm` (float32
/// grayscale, nonpositive invalid). `expected` dimensions, when given, are
/// enforced.
pub fn load_disparity(path: &Path, expected: Option<(u32, u32)>) -> Result<DisparityImage> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let img = match ext.as_str() {
        "png" => load_disparity_png(path)?,
        "pfm" => load_disparity_pfm(path)?,
        other => {
            return Err(DswError::UnsupportedFormat(format!(
                "disparity extension {:?} (want png or pfm)",
                other
            )))
        }
    };
    check_dims(&img, expected)?;
    Ok(img)
}

fn load_disparity_png(path: &Path) -> Result<DisparityImage> {
    let dynimg = image::open(path)?;
    let buf = match dynimg {
        image::DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(DswError::UnsupportedFormat(format!(
                "disparity png must be 16-bit grayscale, got {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = (buf.width(), buf.height());
    let data = buf.pixels().map(|p| p.0[0] as f32 / 256.0).collect();
    DisparityImage::new(w, h, data)
}

/// PFM header is `Pf` (one channel), dimensions, then a scale whose sign
/// encodes endianness; the sample rows are stored bottom-up. The scale
/// magnitude is ignored on read, as disparity PFMs conventionally carry
/// ±1.
fn load_disparity_pfm(path: &Path) -> Result<DisparityImage> {
    let bytes = fs::read(path)?;
    let bad = |msg: &str| DswError::UnsupportedFormat(format!("pfm: {}", msg));
    // Header: three whitespace-separated token groups, one whitespace byte
    // after the scale, then raw samples.
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(&bytes)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(bad("color PFM not supported")),
        _ => return Err(bad("bad magic")),
    }
    let width: u32 = token(&bytes)?.parse().map_err(|_| bad("bad width"))?;
    let height: u32 = token(&bytes)?.parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = token(&bytes)?.parse().map_err(|_| bad("bad scale"))?;
    if width == 0 || height == 0 {
        return Err(DswError::EmptyImage);
    }
    pos += 1; // single whitespace byte separating header from samples
    let n = width as usize * height as usize;
    let need = n * 4;
    if bytes.len() < pos + need {
        return Err(bad("sample data truncated"));
    }
    let little_endian = scale < 0.0;
    let mut data = vec![0f32; n];
    for (i, chunk) in bytes[pos..pos + need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // Rows are stored bottom-up; flip into top-down order.
        let file_row = i / width as usize;
        let col = i % width as usize;
        let row = height as usize - 1 - file_row;
        data[row * width as usize + col] = v;
    }
    DisparityImage::new(width, height, data)
}

/// Writes a 16-bit KITTI-convention PNG (raw = round(256·d), invalid → 0).
/// Quantizes to 1/256 disparity units; use PFM when exact floats matter.
pub fn save_disparity_png(img: &DisparityImage, path: &Path) -> Result<()> {
    let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(img.width(), img.height());
    for (x, y, px) in buf.enumerate_pixels_mut() {
        let d = img.at(x, y);
        let raw = if DisparityImage::is_valid(d) {
            ((d as f64 * 256.0).round()).clamp(0.0, u16::MAX as f64) as u16
        } else {
            0
        };
        *px = image::Luma([raw]);
    }
    buf.save(path)?;
    Ok(())
}

/// Writes a little-endian float PFM; exact inverse of the PFM loader.
pub fn save_disparity_pfm(img: &DisparityImage, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(32 + img.data().len() * 4);
    out.extend_from_slice(format!("Pf\n{} {}\n-1.0\n", img.width(), img.height()).as_bytes());
    for row in (0..img.height()).rev() {
        for col in 0..img.width() {
            out.extend_from_slice(&img.at(col, row).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Disparity serialization format for scene output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispFormat {
    Png16,
    Pfm,
}

impl DispFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DispFormat::Png16 => "png",
            DispFormat::Pfm => "pfm",
        }
    }
}

/// One synthetic object: box center pixel plus its constant disparity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub x: u32,
    pub y: u32,
    pub disparity: f64,
}

/// Fill for pixels not covered by a plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    /// Every background pixel invalid (the matcher found nothing).
    Invalid,
    /// Constant disparity everywhere.
    Constant(f32),
    /// Row-linear disparity from `top` (row 0) to `bottom` (last row) — a
    /// ground-plane-like gradient that defeats constant-window homogeneity.
    Ramp { top: f32, bottom: f32 },
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone)]
pub struct SynthSceneSpec {
    pub width: u32,
    pub height: u32,
    pub plants: Vec<Plant>,
    pub model: ObjectModel,
    pub intrinsics: CameraIntrinsics,
    pub background: Background,
    /// Gaussian noise stddev added to plant pixels (disparity units); 0 = exact.
    pub noise_stddev: f64,
    pub seed: u64,
    pub image_id: String,
    pub class_name: String,
}

impl SynthSceneSpec {
    pub fn new(width: u32, height: u32) -> Self {
        SynthSceneSpec {
            width,
            height,
            plants: Vec::new(),
            model: ObjectModel::pedestrian(),
            intrinsics: CameraIntrinsics::kitti_like(),
            background: Background::Invalid,
            noise_stddev: 0.0,
            seed: 0,
            image_id: "000000".to_string(),
            class_name: "Pedestrian".to_string(),
        }
    }
}

/// Renders the scene: background fill, then each plant's rectangle (sized by
/// projecting the model at the plant disparity, centered on the plant
/// pixel; later plants overdraw earlier ones). Ground truth is the exact
/// list of filled rectangles, so recall against it isolates proposer
/// behavior from annotation noise.
pub fn synth_scene(spec: &SynthSceneSpec) -> Result<Scene> {
    spec.intrinsics.validate()?;
    if spec.width == 0 || spec.height == 0 {
        return Err(DswError::EmptyImage);
    }
    if spec.noise_stddev < 0.0 || !spec.noise_stddev.is_finite() {
        return Err(DswError::InvalidConfig(format!(
            "noise_stddev {} must be finite and >= 0",
            spec.noise_stddev
        )));
    }
    let mut img = match spec.background {
        Background::Invalid => DisparityImage::blank(spec.width, spec.height),
        Background::Constant(c) => DisparityImage::filled(spec.width, spec.height, c),
        Background::Ramp { top, bottom } => {
            let mut img = DisparityImage::blank(spec.width, spec.height);
            for y in 0..spec.height {
                let t = if spec.height > 1 {
                    y as f32 / (spec.height - 1) as f32
                } else {
                    0.0
                };
                let v = top + (bottom - top) * t;
                for x in 0..spec.width {
                    img.set(x, y, v);
                }
            }
            img
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.noise_stddev > 0.0 {
        Some(Normal::new(0.0, spec.noise_stddev).expect("stddev validated finite positive"))
    } else {
        None
    };
    let mut ground_truth = Vec::with_capacity(spec.plants.len());
    for plant in &spec.plants {
        let size = project_model(&spec.intrinsics, &spec.model, plant.disparity)?;
        let (w, h) = (size.width_px, size.height_px);
        let out_of_bounds = DswError::PlantOutOfBounds {
            x: plant.x,
            y: plant.y,
            disparity: plant.disparity,
            img_w: spec.width,
            img_h: spec.height,
        };
        // Same center convention as the proposer: top-left = center − dim/2
        // in integer pixels.
        let x0 = plant.x as i64 - (w / 2) as i64;
        let y0 = plant.y as i64 - (h / 2) as i64;
        if x0 < 0
            || y0 < 0
            || x0 + w as i64 > spec.width as i64
            || y0 + h as i64 > spec.height as i64
        {
            return Err(out_of_bounds);
        }
        let (x0, y0) = (x0 as u32, y0 as u32);
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                let mut d = plant.disparity as f32;
                if let Some(n) = &noise {
                    d += n.sample(&mut rng) as f32;
                }
                img.set(x, y, d);
            }
        }
        ground_truth.push(GroundTruthBox {
            class_name: spec.class_name.clone(),
            x: x0 as f64,
            y: y0 as f64,
            w: w as f64,
            h: h as f64,
            occlusion: Occlusion::FullyVisible,
            truncation: 0.0,
        });
    }
    Ok(Scene {
        image_id: spec.image_id.clone(),
        disparity: img,
        ground_truth,
        intrinsics: spec.intrinsics,
    })
}

/// Writes a scene under `root` in the KITTI layout
/// (`calib/<id>.txt`, `label_2/<id>.txt`, `disp/<id>.<ext>`).
pub fn write_scene(scene: &Scene, root: &Path, format: DispFormat) -> Result<()> {
    let calib_dir = root.join("calib");
    let label_dir = root.join("label_2");
    let disp_dir = root.join("disp");
    fs::create_dir_all(&calib_dir)?;
    fs::create_dir_all(&label_dir)?;
    fs::create_dir_all(&disp_dir)?;
    fs::write(
        calib_dir.join(format!("{}.txt", scene.image_id)),
        format_calibration(&scene.intrinsics),
    )?;
    fs::write(
        label_dir.join(format!("{}.txt", scene.image_id)),
        format_labels(&scene.ground_truth),
    )?;
    let disp_path = disp_dir.join(format!("{}.{}", scene.image_id, format.extension()));
    match format {
        DispFormat::Png16 => save_disparity_png(&scene.disparity, &disp_path),
        DispFormat::Pfm => save_disparity_pfm(&scene.disparity, &disp_path),
    }
}

/// Clips a box to image bounds; drops boxes left with nonpositive extent.
fn clip_box(mut b: GroundTruthBox, w: u32, h: u32) -> Option<GroundTruthBox> {
    let (x1, y1) = (b.x + b.w, b.y + b.h);
    b.x = b.x.max(0.0);
    b.y = b.y.max(0.0);
    let x1 = x1.min(w as f64);
    let y1 = y1.min(h as f64);
    b.w = x1 - b.x;
    b.h = y1 - b.y;
    (b.w > 0.0 && b.h > 0.0).then_some(b)
}

/// Loads one scene by id. The label file may be absent (KITTI test split);
/// ground-truth boxes are clipped to the image. Returns the scene plus the
/// count of malformed label lines.
pub fn load_scene(root: &Path, image_id: &str, class_filter: &str) -> Result<(Scene, usize)> {
    let calib = fs::read_to_string(root.join("calib").join(format!("{}.txt", image_id)))?;
    let intrinsics = parse_calibration(&calib)?;
    let disp_dir = root.join("disp");
    let png = disp_dir.join(format!("{}.png", image_id));
    let pfm = disp_dir.join(format!("{}.pfm", image_id));
    let disp_path = if png.is_file() {
        png
    } else if pfm.is_file() {
        pfm
    } else {
        return Err(DswError::UnsupportedFormat(format!(
            "no disparity file for id {} under {}",
            image_id,
            disp_dir.display()
        )));
    };
    let disparity = load_disparity(&disp_path, None)?;
    let label_path = root.join("label_2").join(format!("{}.txt", image_id));
    let (boxes, malformed) = if label_path.is_file() {
        parse_labels(&fs::read_to_string(label_path)?, class_filter)
    } else {
        (Vec::new(), 0)
    };
    let ground_truth = boxes
        .into_iter()
        .filter_map(|b| clip_box(b, disparity.width(), disparity.height()))
        .collect();
    Ok((
        Scene {
            image_id: image_id.to_string(),
            disparity,
            ground_truth,
            intrinsics,
        },
        malformed,
    ))
}

/// Scene ids present under `root`, from the disparity directory, sorted.
pub fn list_scene_ids(root: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(root.join("disp"))? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        if ext == "png" || ext == "pfm" {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Loads every scene under `root`, sorted by id.
pub fn load_scenes(root: &Path, class_filter: &str) -> Result<Vec<Scene>> {
    list_scene_ids(root)?
        .iter()
        .map(|id| load_scene(root, id, class_filter).map(|(s, _)| s))
        .collect()
}
