//! Small string parsers for flag and config-file values.

use dsw_core::dataset::{Background, Plant};
use dsw_core::proposer::HomogeneityMode;

/// `WxH`, e.g. `1242x375`.
pub fn wxh(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{}'", s))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width '{}'", w))?;
    let h: u32 = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height '{}'", h))?;
    if w == 0 || h == 0 {
        return Err(format!("dimensions must be positive, got '{}'", s));
    }
    Ok((w, h))
}

/// `MIN:MAX[:STEP]` over integers, e.g. `10:100:1` (step defaults to 1).
pub fn span(s: &str) -> Result<(u32, u32, u32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(format!("expected MIN:MAX[:STEP], got '{}'", s));
    }
    let min: u32 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad minimum '{}'", parts[0]))?;
    let max: u32 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad maximum '{}'", parts[1]))?;
    let step: u32 = if parts.len() == 3 {
        parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad step '{}'", parts[2]))?
    } else {
        1
    };
    if min == 0 || max < min || step == 0 {
        return Err(format!("degenerate span '{}'", s));
    }
    Ok((min, max, step))
}

/// Theta grid: either `START:END:STEP` (inclusive range over floats), a
/// comma list `0.3,0.5,0.7`, or a single value.
pub fn grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| format!("bad range start '{}'", parts[0]))?;
        let end: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad range end '{}'", parts[1]))?;
        let step: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad range step '{}'", parts[2]))?;
        if !(step > 0.0) || end < start {
            return Err(format!("degenerate range '{}'", s));
        }
        let mut grid = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + f64::from(k) * step;
            if v > end + 1e-9 {
                break;
            }
            grid.push(v);
            k += 1;
        }
        return Ok(grid);
    }
    if parts.len() != 1 {
        return Err(format!(
            "expected START:END:STEP or a comma list, got '{}'",
            s
        ));
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad grid value '{}'", v))
        })
        .collect()
}

/// 3D region `x0,y0,z0:x1,y1,z1` (camera frame, meters).
pub fn roi(s: &str) -> Result<([f64; 3], [f64; 3]), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected x0,y0,z0:x1,y1,z1, got '{}'", s))?;
    let triple = |part: &str| -> Result<[f64; 3], String> {
        let vals: Vec<f64> = part
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad coordinate '{}'", v))
            })
            .collect::<Result<_, _>>()?;
        vals.try_into()
            .map_err(|_| format!("expected three coordinates in '{}'", part))
    };
    Ok((triple(lo)?, triple(hi)?))
}

pub fn homogeneity_mode(s: &str) -> Result<HomogeneityMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "relative" => Ok(HomogeneityMode::Relative),
        "absolute" => Ok(HomogeneityMode::Absolute),
        other => Err(format!(
            "homogeneity mode must be 'relative' or 'absolute', got '{}'",
            other
        )),
    }
}

/// `invalid`, `constant:V`, or `ramp:TOP:BOTTOM`.
pub fn background(s: &str) -> Result<Background, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match (parts[0].trim().to_ascii_lowercase().as_str(), parts.len()) {
        ("invalid", 1) => Ok(Background::Invalid),
        ("constant", 2) => {
            let v: f32 = parts[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad constant disparity '{}'", parts[1]))?;
            Ok(Background::Constant(v))
        }
        ("ramp", 3) => {
            let top: f32 = parts[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad ramp top '{}'", parts[1]))?;
            let bottom: f32 = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad ramp bottom '{}'", parts[2]))?;
            Ok(Background::Ramp { top, bottom })
        }
        _ => Err(format!(
            "background must be 'invalid', 'constant:V', or 'ramp:TOP:BOTTOM', got '{}'",
            s
        )),
    }
}

/// Inline plant list `x,y,d[;x,y,d...]` (centers in pixels, disparity).
pub fn plants_inline(s: &str) -> Result<Vec<Plant>, String> {
    s.split(';')
        .filter(|chunk| !chunk.trim().is_empty())
        .map(plant_triple)
        .collect()
}

/// Plant file: one `x y d` (or `x,y,d`) per line; `#` comments.
pub fn plants_file(content: &str) -> Result<Vec<Plant>, String> {
    content
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            if l.contains(',') {
                plant_triple(l)
            } else {
                plant_triple(&l.split_whitespace().collect::<Vec<_>>().join(","))
            }
        })
        .collect()
}

fn plant_triple(s: &str) -> Result<Plant, String> {
    let vals: Vec<&str> = s.split(',').map(str::trim).collect();
    if vals.len() != 3 {
        return Err(format!("expected x,y,disparity, got '{}'", s));
    }
    let x: u32 = vals[0]
        .parse()
        .map_err(|_| format!("bad x '{}'", vals[0]))?;
    let y: u32 = vals[1]
        .parse()
        .map_err(|_| format!("bad y '{}'", vals[1]))?;
    let d: f64 = vals[2]
        .parse()
        .map_err(|_| format!("bad disparity '{}'", vals[2]))?;
    Ok(Plant { x, y, disparity: d })
}
