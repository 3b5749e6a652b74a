//! Benchmark-format sequences: an image directory plus a ground-truth file
//! with one `x,y,w,h` box per line in 1-indexed pixel coordinates.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{ensure, Error, Result};
use crate::features::Frame;
use crate::tracker::BoundingBox;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];
const GROUND_TRUTH_NAMES: [&str; 2] = ["groundtruth_rect.txt", "groundtruth.txt"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceManifest {
    pub name: String,
    pub image_dir: PathBuf,
    pub ground_truth_path: PathBuf,
    /// First frame, 1-indexed into the sorted image list.
    pub start_frame: usize,
    /// Last frame, inclusive; `None` runs to the last image.
    pub end_frame: Option<usize>,
}

impl SequenceManifest {
    /// Manifest for a sequence directory holding images (directly or in
    /// `img/`) and `groundtruth_rect.txt` or `groundtruth.txt`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let img = dir.join("img");
        let image_dir = if img.is_dir() { img } else { dir.to_path_buf() };
        let ground_truth_path = GROUND_TRUTH_NAMES
            .iter()
            .map(|n| dir.join(n))
            .find(|p| p.is_file())
            .ok_or_else(|| {
                Error::io(
                    dir.join(GROUND_TRUTH_NAMES[1]),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no ground-truth file"),
                )
            })?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into());
        Ok(Self {
            name,
            image_dir,
            ground_truth_path,
            start_frame: 1,
            end_frame: None,
        })
    }
}

#[derive(Debug, Clone)]
enum FrameSource {
    Memory(Vec<Frame>),
    Files(Vec<PathBuf>),
}

/// Frames plus per-frame ground truth. File-backed frames decode on access.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    /// `None` marks frames where the target is absent or unannotated.
    pub ground_truth: Vec<Option<BoundingBox>>,
    source: FrameSource,
}

impl Sequence {
    pub fn in_memory(name: impl Into<String>, frames: Vec<Frame>, ground_truth: Vec<Option<BoundingBox>>) -> Result<Self> {
        ensure!(
            frames.len() == ground_truth.len(),
            Contract,
            "{} frames but {} ground-truth entries",
            frames.len(),
            ground_truth.len()
        );
        Ok(Self {
            name: name.into(),
            ground_truth,
            source: FrameSource::Memory(frames),
        })
    }

    pub fn from_files(name: impl Into<String>, paths: Vec<PathBuf>, ground_truth: Vec<Option<BoundingBox>>) -> Result<Self> {
        ensure!(
            paths.len() == ground_truth.len(),
            Contract,
            "{} frames but {} ground-truth entries",
            paths.len(),
            ground_truth.len()
        );
        Ok(Self {
            name: name.into(),
            ground_truth,
            source: FrameSource::Files(paths),
        })
    }

    pub fn len(&self) -> usize {
        self.ground_truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground_truth.is_empty()
    }

    pub fn frame(&self, i: usize) -> Result<Frame> {
        match &self.source {
            FrameSource::Memory(frames) => Ok(frames[i].clone()),
            FrameSource::Files(paths) => load_image(&paths[i]),
        }
    }

    pub fn frame_labels(&self) -> Vec<String> {
        match &self.source {
            FrameSource::Memory(frames) => (0..frames.len()).map(|i| i.to_string()).collect(),
            FrameSource::Files(paths) => paths
                .iter()
                .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
                .collect(),
        }
    }
}

pub fn load_image(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Frame::from_rgb_image(&img.to_rgb8()))
}

pub fn save_png(path: &Path, frame: &Frame) -> Result<()> {
    frame.to_rgb_image().save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Image files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Parses one ground-truth line. Fields may be separated by commas, tabs or
/// spaces. A `NaN` field marks an absent box.
pub fn parse_box_line(line: &str) -> std::result::Result<Option<BoundingBox>, String> {
    let fields: Vec<&str> = line
        .split([',', '\t', ' '])
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let mut v = [0.0; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f.parse::<f64>().map_err(|_| format!("cannot parse {f:?} as a number"))?;
    }
    if v.iter().any(|x| x.is_nan()) {
        return Ok(None);
    }
    Ok(Some(BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3])))
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<Option<BoundingBox>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let used = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
    lines[..used]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            parse_box_line(l.trim()).map_err(|message| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// Writes boxes in the 1-indexed text format; absent boxes become `NaN`.
pub fn write_ground_truth(path: &Path, boxes: &[Option<BoundingBox>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for b in boxes {
        let r = match b {
            Some(b) => writeln!(out, "{},{},{},{}", b.x + 1.0, b.y + 1.0, b.w, b.h),
            None => writeln!(out, "NaN,NaN,NaN,NaN"),
        };
        r.map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Resolves a manifest into file-backed frames with aligned ground truth.
/// Ground-truth line 1 belongs to `start_frame`.
pub fn load_sequence(manifest: &SequenceManifest) -> Result<Sequence> {
    let images = list_images(&manifest.image_dir)?;
    let start = manifest.start_frame;
    let end = manifest.end_frame.unwrap_or(images.len());
    ensure!(
        start >= 1 && start <= end && end <= images.len(),
        Contract,
        "frame range {start}..={end} is outside the {} images in {}",
        images.len(),
        manifest.image_dir.display()
    );
    let frames = images[start - 1..end].to_vec();
    let mut gt = read_ground_truth(&manifest.ground_truth_path)?;
    ensure!(
        gt.len() >= frames.len(),
        Contract,
        "{} has {} boxes for {} frames",
        manifest.ground_truth_path.display(),
        gt.len(),
        frames.len()
    );
    gt.truncate(frames.len());
    Sequence::from_files(manifest.name.clone(), frames, gt)
}

/// Reads a list of sequences, one per line: `<dir> [<start> <end>]`.
/// Relative directories are taken relative to the list file. Blank lines and
/// lines starting with `#` are ignored.
pub fn read_manifest_list(path: &Path) -> Result<Vec<SequenceManifest>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let mut m = SequenceManifest::from_dir(&base.join(fields[0]))?;
        match fields.len() {
            1 => {}
            3 => {
                let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(format!("bad frame number {s:?}")));
                m.start_frame = num(fields[1])?;
                m.end_frame = Some(num(fields[2])?);
            }
            n => return Err(parse_err(format!("expected 1 or 3 fields, found {n}"))),
        }
        out.push(m);
    }
    Ok(out)
}
