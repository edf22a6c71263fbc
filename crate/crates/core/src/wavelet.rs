//! Orthogonal 2-D discrete wavelet transform (Daubechies-8, periodized).
//!
//! Inputs whose sides are not multiples of `2^levels` are extended at the
//! bottom/right by symmetric reflection; the inverse trims the extension.

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Daubechies-8 (16-tap) scaling filter, decomposition order.
pub const DB8_LOWPASS: [f64; 16] = [
    -0.00011747678412476953,
    0.0006754494064505693,
    -0.00039174037337694705,
    -0.004870352993451574,
    0.008746094047405777,
    0.013981027917398282,
    -0.044088253930794755,
    -0.017369301001807547,
    0.12874742662047847,
    0.0004724845739132828,
    -0.2840155429615469,
    -0.015829105256349306,
    0.5853546836542067,
    0.6756307362972898,
    0.31287159091429995,
    0.05441584224310401,
];

/// Quadrature-mirror highpass filter `g[k] = (-1)^k h[L-1-k]`.
pub fn db8_highpass() -> [f64; 16] {
    let mut g = [0.0; 16];
    for (k, gk) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *gk = sign * DB8_LOWPASS[15 - k];
    }
    g
}

/// Detail subbands of one decomposition level.
///
/// The first letter names the filter applied along rows (x), the second
/// along columns (y).
#[derive(Clone, Debug, PartialEq)]
pub struct DetailBands {
    pub lh: Raster,
    pub hl: Raster,
    pub hh: Raster,
}

impl DetailBands {
    pub fn bands(&self) -> [&Raster; 3] {
        [&self.lh, &self.hl, &self.hh]
    }

    pub fn bands_mut(&mut self) -> [&mut Raster; 3] {
        [&mut self.lh, &mut self.hl, &mut self.hh]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubbandPyramid {
    /// Size of the transformed input before padding.
    pub width: usize,
    pub height: usize,
    /// Coarsest approximation band.
    pub approx: Raster,
    /// Detail bands, finest level first.
    pub details: Vec<DetailBands>,
}

impl SubbandPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }
}

/// Index into a mirror-periodic extension of a length-`n` signal.
#[inline]
fn reflect(j: usize, n: usize) -> usize {
    let k = j % (2 * n);
    if k < n {
        k
    } else {
        2 * n - 1 - k
    }
}

fn padded_len(n: usize, levels: usize) -> usize {
    let block = 1usize << levels;
    n.div_ceil(block) * block
}

fn check_depth(width: usize, height: usize, levels: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::Dimension(format!(
            "{width}x{height} is too small for a wavelet transform"
        )));
    }
    if levels == 0 || levels > 24 {
        return Err(Error::Dimension(format!("unsupported level count {levels}")));
    }
    let min_side = 1usize << (levels - 1);
    if width < min_side || height < min_side {
        return Err(Error::Dimension(format!(
            "{levels} levels too deep for {width}x{height} (sides must be >= {min_side})"
        )));
    }
    Ok(())
}

fn analyze(x: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..lo.len() {
            let v = x[(2 * i + k) % n];
            a += lo[k] * v;
            d += hi[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

fn synthesize(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.fill(0.0);
    for i in 0..n / 2 {
        let (a, d) = (approx[i], detail[i]);
        for k in 0..lo.len() {
            out[(2 * i + k) % n] += lo[k] * a + hi[k] * d;
        }
    }
}

/// One 2-D analysis step. Returns (ll, lh, hl, hh).
fn forward_step(x: &Raster) -> (Raster, Raster, Raster, Raster) {
    let hi = db8_highpass();
    let lo = &DB8_LOWPASS;
    let (w, h) = (x.width(), x.height());
    let (hw, hh) = (w / 2, h / 2);

    // Rows: split every row into low and high halves.
    let mut row_lo = Raster::zeros(hw, h);
    let mut row_hi = Raster::zeros(hw, h);
    let mut a = vec![0.0; hw];
    let mut d = vec![0.0; hw];
    for r in 0..h {
        analyze(x.row(r), lo, &hi, &mut a, &mut d);
        row_lo.data_mut()[r * hw..(r + 1) * hw].copy_from_slice(&a);
        row_hi.data_mut()[r * hw..(r + 1) * hw].copy_from_slice(&d);
    }

    // Columns of each half.
    let mut col = vec![0.0; h];
    let mut ca = vec![0.0; hh];
    let mut cd = vec![0.0; hh];
    let mut split_cols = |src: &Raster| {
        let mut low = Raster::zeros(hw, hh);
        let mut high = Raster::zeros(hw, hh);
        for c in 0..hw {
            for (r, v) in col.iter_mut().enumerate() {
                *v = src.get(r, c);
            }
            analyze(&col, lo, &hi, &mut ca, &mut cd);
            for r in 0..hh {
                low.set(r, c, ca[r]);
                high.set(r, c, cd[r]);
            }
        }
        (low, high)
    };
    let (ll, lh) = split_cols(&row_lo);
    let (hl, hh_band) = split_cols(&row_hi);
    (ll, lh, hl, hh_band)
}

fn inverse_step(ll: &Raster, lh: &Raster, hl: &Raster, hh: &Raster) -> Raster {
    let hi = db8_highpass();
    let lo = &DB8_LOWPASS;
    let (hw, hh_rows) = (ll.width(), ll.height());
    let (w, h) = (2 * hw, 2 * hh_rows);

    let merge_cols = |low: &Raster, high: &Raster| {
        let mut out = Raster::zeros(hw, h);
        let mut ca = vec![0.0; hh_rows];
        let mut cd = vec![0.0; hh_rows];
        let mut col = vec![0.0; h];
        for c in 0..hw {
            for r in 0..hh_rows {
                ca[r] = low.get(r, c);
                cd[r] = high.get(r, c);
            }
            synthesize(&ca, &cd, lo, &hi, &mut col);
            for (r, v) in col.iter().enumerate() {
                out.set(r, c, *v);
            }
        }
        out
    };
    let row_lo = merge_cols(ll, lh);
    let row_hi = merge_cols(hl, hh);

    let mut out = Raster::zeros(w, h);
    let mut buf = vec![0.0; w];
    for r in 0..h {
        synthesize(row_lo.row(r), row_hi.row(r), lo, &hi, &mut buf);
        out.data_mut()[r * w..(r + 1) * w].copy_from_slice(&buf);
    }
    out
}

/// Multi-level forward transform.
pub fn wavelet_forward(img: &Raster, levels: usize) -> Result<SubbandPyramid> {
    let (w, h) = (img.width(), img.height());
    check_depth(w, h, levels)?;
    let (pw, ph) = (padded_len(w, levels), padded_len(h, levels));
    let mut current = if (pw, ph) == (w, h) {
        img.clone()
    } else {
        Raster::from_fn(pw, ph, |r, c| img.get(reflect(r, h), reflect(c, w)))
    };
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (ll, lh, hl, hh) = forward_step(&current);
        details.push(DetailBands { lh, hl, hh });
        current = ll;
    }
    Ok(SubbandPyramid {
        width: w,
        height: h,
        approx: current,
        details,
    })
}

/// Inverse transform; trims the padding added by [`wavelet_forward`].
pub fn wavelet_inverse(pyr: &SubbandPyramid) -> Result<Raster> {
    let mut current = pyr.approx.clone();
    for (lvl, bands) in pyr.details.iter().enumerate().rev() {
        for b in bands.bands() {
            if !b.same_shape(&current) {
                return Err(Error::Dimension(format!(
                    "level {lvl} band {}x{} does not match approximation {}x{}",
                    b.width(),
                    b.height(),
                    current.width(),
                    current.height()
                )));
            }
        }
        current = inverse_step(&current, &bands.lh, &bands.hl, &bands.hh);
    }
    if current.width() < pyr.width || current.height() < pyr.height {
        return Err(Error::Dimension("pyramid smaller than its recorded size".into()));
    }
    if (current.width(), current.height()) == (pyr.width, pyr.height) {
        Ok(current)
    } else {
        current.window(0, 0, pyr.width, pyr.height)
    }
}
