//! Flat `key = value` scenario files with dotted sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mfront::io::GridSamples;
use mfront::source::GaussCosine;
use mfront::{BathyKind, Bathymetry, Error, ProfileMethod, Result, SourceModel};

const KEYS: &[&str] = &[
    "mu",
    "g",
    "n_psi",
    "T",
    "dt",
    "times",
    "output",
    "scale.length",
    "bathy.kind",
    "bathy.h0",
    "bathy.slope",
    "bathy.amp",
    "bathy.width",
    "bathy.center",
    "bathy.file",
    "bathy.domain",
    "source.kind",
    "source.vbar",
    "source.a1",
    "source.a2",
    "source.b1",
    "source.b2",
    "source.theta",
    "source.chi",
    "source.file",
    "source.n_rho",
    "source.n_psi",
    "source.center",
    "grid.x0",
    "grid.y0",
    "grid.x1",
    "grid.y1",
    "grid.nx",
    "grid.ny",
    "field.band_factor",
    "field.method",
    "oracle.kind",
    "oracle.richardson",
    "oracle.dispersive",
    "oracle.mask_factor",
    "oracle.dt",
    "profile.z_min",
    "profile.z_max",
    "profile.n",
    "profile.psi",
    "profile.m",
    "threshold.h",
    "threshold.l",
];

#[derive(Clone, Debug, PartialEq)]
pub enum BathySpec {
    Constant { h0: f64 },
    LinearSlope { h0: f64, slope: [f64; 2] },
    RadialBank { h0: f64, amp: f64, width: f64, center: [f64; 2] },
    Gridded { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    GaussCosine { vbar: f64, a1: f64, a2: f64, b1: f64, b2: f64, theta: f64, chi: f64 },
    CustomGrid { file: PathBuf, n_rho: usize, n_psi: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Auto,
    Fd,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub mu: f64,
    pub g: f64,
    pub n_psi: usize,
    pub t_end: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub output: PathBuf,
    pub scale_length: f64,
    pub bathy: BathySpec,
    pub bathy_domain: Option<[f64; 4]>,
    pub source: SourceSpec,
    /// Source centre; the scene is translated so the source sits at the origin.
    pub center: [f64; 2],
    pub grid: GridSpec,
    pub band_factor: f64,
    pub method: ProfileMethod,
    pub oracle: OracleKind,
    pub richardson: bool,
    pub dispersive: bool,
    pub mask_factor: f64,
    pub oracle_dt: Option<f64>,
    pub profile_z: (f64, f64, usize),
    pub profile_psi: f64,
    pub profile_m: i32,
    pub threshold: (f64, f64),
    /// Echo of the keys as written, in file order.
    pub entries: Vec<(String, String)>,
}

struct Raw {
    map: BTreeMap<String, (usize, String)>,
    base: PathBuf,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl Raw {
    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |v| v.0)
    }
    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|v| v.1.as_str())
    }
    fn f(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.map.get(key) {
            Some((ln, v)) => v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| perr(*ln, format!("{key}: expected a number, got `{v}`"))),
            None => default.ok_or_else(|| perr(0, format!("missing required key `{key}`"))),
        }
    }
    fn u(&self, key: &str, default: usize) -> Result<usize> {
        match self.map.get(key) {
            Some((ln, v)) => v.parse::<usize>().map_err(|_| perr(*ln, format!("{key}: expected a non-negative integer, got `{v}`"))),
            None => Ok(default),
        }
    }
    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.map.get(key) {
            Some((ln, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| perr(*ln, format!("{key}: bad number `{}`", s.trim()))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            None => Ok(None),
        }
    }
    fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.list(key)? {
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(perr(self.line(key), format!("{key}: expected two comma-separated numbers"))),
            None => Ok(default),
        }
    }
    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.str(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(perr(self.line(key), format!("{key}: expected true/false, got `{v}`"))),
        }
    }
    fn path(&self, key: &str) -> Result<PathBuf> {
        let p = PathBuf::from(self.str(key).ok_or_else(|| perr(0, format!("missing required key `{key}`")))?);
        Ok(if p.is_absolute() { p } else { self.base.join(p) })
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| perr(0, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parse config text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut raw = Raw { map: BTreeMap::new(), base: base.to_path_buf() };
        let mut entries = vec![];
        for (k, line) in text.lines().enumerate() {
            let ln = k + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body.split_once('=').ok_or_else(|| perr(ln, format!("expected `key = value`, got `{body}`")))?;
            let (key, val) = (key.trim(), val.trim());
            if !KEYS.contains(&key) {
                return Err(perr(ln, format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = raw.map.get(key) {
                return Err(perr(ln, format!("duplicate key `{key}` (first set on line {first})")));
            }
            raw.map.insert(key.to_string(), (ln, val.to_string()));
            entries.push((key.to_string(), val.to_string()));
        }
        Self::from_raw(&raw, entries)
    }

    fn from_raw(r: &Raw, entries: Vec<(String, String)>) -> Result<Self> {
        let check = |ok: bool, key: &str, msg: String| if ok { Ok(()) } else { Err(perr(r.line(key), msg)) };

        let mu = r.f("mu", None)?;
        check(mu > 0.0 && mu < 0.5, "mu", format!("mu must lie in (0, 0.5), got {mu}"))?;
        let g = r.f("g", Some(9.81))?;
        check(g > 0.0, "g", format!("g must be positive, got {g}"))?;
        let n_psi = r.u("n_psi", 512)?;
        check(n_psi >= 16, "n_psi", format!("n_psi must be at least 16, got {n_psi}"))?;
        let t_end = r.f("T", None)?;
        check(t_end > 0.0, "T", format!("T must be positive, got {t_end}"))?;
        let dt = r.f("dt", Some(t_end / 4096.0))?;
        check(dt > 0.0 && dt <= t_end, "dt", format!("dt must lie in (0, T], got {dt}"))?;
        let times = r.list("times")?.unwrap_or_else(|| vec![t_end]);
        for &t in &times {
            check(t > 0.0 && t <= t_end, "times", format!("evaluation time {t} outside (0, T={t_end}]"))?;
        }
        let output = match r.str("output") {
            Some(_) => r.path("output")?,
            None => r.base.join("out"),
        };
        let scale_length = r.f("scale.length", Some(1.0))?;
        check(scale_length > 0.0, "scale.length", "scale.length must be positive".into())?;

        let h0 = r.f("bathy.h0", Some(1.0))?;
        let bathy = match r.str("bathy.kind").unwrap_or("constant") {
            "constant" => BathySpec::Constant { h0 },
            "linear_slope" => BathySpec::LinearSlope { h0, slope: r.pair("bathy.slope", [0.0, 0.0])? },
            "radial_bank" => BathySpec::RadialBank {
                h0,
                amp: r.f("bathy.amp", None)?,
                width: r.f("bathy.width", None)?,
                center: r.pair("bathy.center", [0.0, 0.0])?,
            },
            "gridded" => BathySpec::Gridded { file: r.path("bathy.file")? },
            k => return Err(perr(r.line("bathy.kind"), format!("unknown bathy.kind `{k}`"))),
        };
        let bathy_domain = match r.list("bathy.domain")? {
            Some(v) if v.len() == 4 && v[0] < v[2] && v[1] < v[3] => Some([v[0], v[1], v[2], v[3]]),
            Some(_) => return Err(perr(r.line("bathy.domain"), "bathy.domain needs x0, y0, x1, y1 with x0 < x1, y0 < y1")),
            None => None,
        };

        let source = match r.str("source.kind").unwrap_or("gauss_cosine") {
            "gauss_cosine" => SourceSpec::GaussCosine {
                vbar: r.f("source.vbar", Some(1.0))?,
                a1: r.f("source.a1", Some(0.0))?,
                a2: r.f("source.a2", Some(0.0))?,
                b1: r.f("source.b1", Some(0.5))?,
                b2: r.f("source.b2", Some(0.5))?,
                theta: r.f("source.theta", Some(0.0))?,
                chi: r.f("source.chi", Some(0.0))?,
            },
            "custom_grid" => SourceSpec::CustomGrid { file: r.path("source.file")?, n_rho: r.u("source.n_rho", 256)?, n_psi: r.u("source.n_psi", 128)? },
            k => return Err(perr(r.line("source.kind"), format!("unknown source.kind `{k}`"))),
        };
        if let SourceSpec::GaussCosine { b1, b2, .. } = source {
            check(b1 > 0.0, "source.b1", format!("source.b1 must be positive, got {b1}"))?;
            check(b2 > 0.0, "source.b2", format!("source.b2 must be positive, got {b2}"))?;
        }
        let center = r.pair("source.center", [0.0, 0.0])?;

        let half = 1.2 * t_end * h0.max(1e-300).sqrt() * g.sqrt();
        let grid = GridSpec {
            x0: r.f("grid.x0", Some(-half))?,
            y0: r.f("grid.y0", Some(-half))?,
            x1: r.f("grid.x1", Some(half))?,
            y1: r.f("grid.y1", Some(half))?,
            nx: r.u("grid.nx", 256)?,
            ny: r.u("grid.ny", 256)?,
        };
        check(grid.x1 > grid.x0 && grid.y1 > grid.y0, "grid.x1", "grid box must have x0 < x1 and y0 < y1".into())?;
        check(grid.nx >= 2 && grid.ny >= 2, "grid.nx", "grid needs at least 2x2 nodes".into())?;

        let band_factor = r.f("field.band_factor", Some(12.0))?;
        check(band_factor > 0.0, "field.band_factor", "field.band_factor must be positive".into())?;
        let method = match r.str("field.method").unwrap_or("auto") {
            "auto" => ProfileMethod::Auto,
            "closed" => ProfileMethod::ClosedForm,
            "quadrature" => ProfileMethod::Quadrature,
            k => return Err(perr(r.line("field.method"), format!("field.method must be auto, closed or quadrature, got `{k}`"))),
        };
        let oracle = match r.str("oracle.kind").unwrap_or("auto") {
            "auto" => OracleKind::Auto,
            "fd" => OracleKind::Fd,
            "spectral" => OracleKind::Spectral,
            k => return Err(perr(r.line("oracle.kind"), format!("oracle.kind must be auto, fd or spectral, got `{k}`"))),
        };
        let mask_factor = r.f("oracle.mask_factor", Some(0.5))?;
        check(mask_factor > 0.0, "oracle.mask_factor", "oracle.mask_factor must be positive".into())?;
        let oracle_dt = r.map.contains_key("oracle.dt").then(|| r.f("oracle.dt", None)).transpose()?;
        if let Some(d) = oracle_dt {
            check(d > 0.0, "oracle.dt", "oracle.dt must be positive".into())?;
        }

        let profile_z = (r.f("profile.z_min", Some(-20.0))?, r.f("profile.z_max", Some(20.0))?, r.u("profile.n", 401)?);
        check(profile_z.0 < profile_z.1 && profile_z.2 >= 2, "profile.n", "profile needs z_min < z_max and n >= 2".into())?;
        let profile_m = match r.str("profile.m") {
            Some(v) => v.parse::<i32>().map_err(|_| perr(r.line("profile.m"), format!("profile.m: expected an integer, got `{v}`")))?,
            None => 0,
        };
        let threshold = (r.f("threshold.h", Some(h0))?, r.f("threshold.l", Some(mu))?);
        check(threshold.0 > 0.0 && threshold.1 > 0.0, "threshold.h", "threshold.h and threshold.l must be positive".into())?;

        Ok(ScenarioConfig {
            mu,
            g,
            n_psi,
            t_end,
            dt,
            times,
            output,
            scale_length,
            bathy,
            bathy_domain,
            source,
            center,
            grid,
            band_factor,
            method,
            oracle,
            richardson: r.flag("oracle.richardson", true)?,
            dispersive: r.flag("oracle.dispersive", false)?,
            mask_factor,
            oracle_dt,
            profile_z,
            profile_psi: r.f("profile.psi", Some(0.0))?,
            profile_m,
            threshold,
            entries,
        })
    }

    /// Bathymetry in source-centred coordinates.
    pub fn build_bathymetry(&self) -> Result<Arc<Bathymetry>> {
        let [cx, cy] = self.center;
        let kind = match &self.bathy {
            BathySpec::Constant { h0 } => BathyKind::Constant { h0: *h0 },
            BathySpec::LinearSlope { h0, slope } => {
                // h0 (1 + s.(x' + c)) = h0 (1 + s.c) (1 + s'.x')
                let f = 1.0 + slope[0] * cx + slope[1] * cy;
                if f <= 0.0 {
                    return Err(Error::Validity("depth is nonpositive at the source centre".into()));
                }
                BathyKind::LinearSlope { h0: h0 * f, slope: [slope[0] / f, slope[1] / f] }
            }
            BathySpec::RadialBank { h0, amp, width, center } => {
                BathyKind::RadialBank { h0: *h0, amp: *amp, width: *width, center: [center[0] - cx, center[1] - cy] }
            }
            BathySpec::Gridded { file } => {
                let mut s = GridSamples::read(file)?;
                s.x0 -= cx;
                s.y0 -= cy;
                BathyKind::Gridded(s)
            }
        };
        let mut b = Bathymetry::new(kind, self.g)?;
        if let Some(d) = self.bathy_domain {
            b = b.with_domain([d[0] - cx, d[1] - cy, d[2] - cx, d[3] - cy]);
        }
        Ok(Arc::new(b))
    }

    pub fn build_source(&self) -> Result<Arc<SourceModel>> {
        let s = match &self.source {
            SourceSpec::GaussCosine { vbar, a1, a2, b1, b2, theta, chi } => {
                SourceModel::gauss(GaussCosine { vbar: *vbar, a1: *a1, a2: *a2, b1: *b1, b2: *b2, theta: *theta, chi: *chi })?
            }
            SourceSpec::CustomGrid { file, n_rho, n_psi } => SourceModel::custom(GridSamples::read(file)?, *n_rho, *n_psi)?,
        };
        Ok(Arc::new(s))
    }

    pub fn is_constant_depth(&self) -> bool {
        matches!(self.bathy, BathySpec::Constant { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::parse(s, Path::new("/tmp"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("mu = 0.05\nT = 2\n").unwrap();
        assert_eq!(c.n_psi, 512);
        assert_eq!(c.dt, 2.0 / 4096.0);
        assert_eq!(c.g, 9.81);
        assert_eq!(c.times, vec![2.0]);
        assert_eq!(c.bathy, BathySpec::Constant { h0: 1.0 });
        assert!(matches!(c.source, SourceSpec::GaussCosine { b1, b2, .. } if b1 == 0.5 && b2 == 0.5));
    }

    #[test]
    fn invariant_violation_reports_the_key_line() {
        let e = parse("T = 1\n# comment\nmu = 0.7\n").unwrap_err();
        match e {
            Error::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("(0, 0.5)"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
        let e = parse("mu = 0.1\nT = 1\ntimes = 0.5, 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(parse("mu = 0.1\nT = 1\nbathy.depth = 3\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("mu = 0.1\nT = 1\nmu = 0.2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("mu 0.1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("T = 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn source_centre_translates_the_bank() {
        let c = parse("mu = 0.1\nT = 1\nbathy.kind = radial_bank\nbathy.amp = 0.5\nbathy.width = 0.5\nsource.center = 0, -0.8\n").unwrap();
        let b = c.build_bathymetry().unwrap();
        match b.kind {
            BathyKind::RadialBank { center, .. } => assert_eq!(center, [0.0, 0.8]),
            ref k => panic!("{k:?}"),
        }
    }

    #[test]
    fn translated_slope_keeps_depth() {
        let c = parse("mu = 0.1\nT = 1\nbathy.kind = linear_slope\nbathy.slope = 0.2, -0.1\nbathy.h0 = 2\nsource.center = 1.5, 0.5\n").unwrap();
        let b = c.build_bathymetry().unwrap();
        let x = mfront::V2::new(0.3, -0.4);
        let want = 2.0 * (1.0 + 0.2 * 1.8 - 0.1 * 0.1);
        assert!((b.depth(&x).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn shipped_bank_config() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/radial_bank.cfg");
        let c = ScenarioConfig::load(&path).unwrap();
        assert_eq!(c.bathy, BathySpec::RadialBank { h0: 1.0, amp: 0.5, width: 0.5, center: [0.0, 0.0] });
        assert_eq!((c.mu, c.g, c.n_psi, c.t_end), (0.05, 1.0, 512, 3.0));
        assert_eq!(c.dt, 3.0 / 4096.0);
        assert_eq!(c.times, vec![2.6, 3.0]);
        assert_eq!(c.center, [0.0, -0.8]);
        assert_eq!(c.oracle, OracleKind::Fd);
        let b = c.build_bathymetry().unwrap();
        assert!(matches!(b.kind, BathyKind::RadialBank { center, .. } if center == [0.0, 0.8]));
        assert_eq!(b.depth(&mfront::V2::new(0.0, 0.8)).unwrap(), 0.5);
    }
}
