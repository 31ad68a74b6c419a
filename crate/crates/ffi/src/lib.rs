//! C interface to `crowdvet`.
//!
//! Objects cross the boundary as opaque handles created by `cv_*_new`/`cv_*_from_*`
//! and released with the matching `cv_*_free`. Every fallible call returns a
//! [`CvStatus`]; on failure [`cv_last_error_message`] describes the cause.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crowdvet::threat::{AdversaryStrategy, ObservationChannel};
use crowdvet::topology::{algebraic_connectivity, fixture_graph, min_tau, CommGraph, NodeId, Role, RoleAssignment};
use crowdvet::trust::{
    all_correct, find_spoofed_robots, rounds_bound_baseline, rounds_bound_theorem1, TrustValue, TrustVector, World,
};
use crowdvet::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Domain = 3,
    Contract = 4,
    RankDeficient = 5,
    FloodStalled = 6,
    Singularity = 7,
    InfeasibleTracking = 8,
    Unstable = 9,
    Config = 10,
    Io = 11,
    Panic = 12,
}

/// Role codes for [`cv_world_from_edges`].
pub const CV_ROLE_LEGITIMATE: u8 = 0;
pub const CV_ROLE_SPAWNING: u8 = 1;
pub const CV_ROLE_SPOOFED: u8 = 2;
pub const CV_ROLE_HIDDEN: u8 = 3;

/// Trust entry codes returned by [`cv_trust_entry`].
pub const CV_TRUST: i32 = 1;
pub const CV_DISTRUST: i32 = 0;
pub const CV_NO_DATA: i32 = -1;

/// A communication graph with roles and an observation channel.
pub struct CvWorld {
    world: World,
}

/// Final trust vectors of every legitimate robot.
pub struct CvTrust {
    n: usize,
    vectors: BTreeMap<NodeId, TrustVector>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CvStatus {
    match e {
        Error::Input(_) => CvStatus::InvalidInput,
        Error::Domain(_) => CvStatus::Domain,
        Error::Contract(_) => CvStatus::Contract,
        Error::RankDeficient { .. } => CvStatus::RankDeficient,
        Error::FloodStalled { .. } => CvStatus::FloodStalled,
        Error::Singularity(..) => CvStatus::Singularity,
        Error::InfeasibleTracking { .. } => CvStatus::InfeasibleTracking,
        Error::Unstable(_) => CvStatus::Unstable,
        Error::Config(_) => CvStatus::Config,
        Error::Io(_) | Error::Csv(_) => CvStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard<F: FnOnce() -> Result<(), (CvStatus, String)>>(f: F) -> CvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CvStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (CvStatus, String)>;
}

impl<T> IntoFfi<T> for crowdvet::Result<T> {
    fn ffi(self) -> Result<T, (CvStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (CvStatus, String) {
    (CvStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (CvStatus, String) {
    (CvStatus::InvalidInput, msg.into())
}

fn channel(epsilon: f64) -> crowdvet::Result<ObservationChannel> {
    if epsilon == 0.5 {
        Ok(ObservationChannel::noiseless())
    } else {
        ObservationChannel::bernoulli(epsilon)
    }
}

fn boxed_world(world: World, out: *mut *mut CvWorld) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(CvWorld { world })) };
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a named fixture such as `"fig3"` or `"complete(l=10,h=5,s=100)"`.
/// `epsilon = 0.5` selects a perfect channel.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_world_from_fixture(name: *const c_char, epsilon: f64, out: *mut *mut CvWorld) -> CvStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; the caller guarantees NUL termination.
        let name = unsafe { CStr::from_ptr(name) }.to_str().map_err(|e| invalid(e.to_string()))?;
        let (g, roles) = fixture_graph(name).ffi()?;
        let world = World::new(g, roles, channel(epsilon).ffi()?, AdversaryStrategy::default()).ffi()?;
        boxed_world(world, out);
        Ok(())
    })
}

/// Builds a world from `edge_count` pairs in `edges` (length `2·edge_count`)
/// and `n` role codes. Spoofed robots are assigned to spawners round-robin.
///
/// # Safety
/// `edges` must point to `2·edge_count` values, `roles` to `n` values and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cv_world_from_edges(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    roles: *const u8,
    epsilon: f64,
    out: *mut *mut CvWorld,
) -> CvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if roles.is_null() && n > 0 {
            return Err(null("roles"));
        }
        if edges.is_null() && edge_count > 0 {
            return Err(null("edges"));
        }
        // SAFETY: lengths are the caller's contract; pointers checked above.
        let pairs = if edge_count == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(edges, 2 * edge_count) } };
        let codes = if n == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(roles, n) } };
        let g = CommGraph::from_edges(n, pairs.chunks_exact(2).map(|p| (p[0], p[1]))).ffi()?;
        let roles: Vec<Role> = codes
            .iter()
            .map(|&c| match c {
                CV_ROLE_LEGITIMATE => Ok(Role::Legitimate),
                CV_ROLE_SPAWNING => Ok(Role::Spawning),
                CV_ROLE_SPOOFED => Ok(Role::Spoofed),
                CV_ROLE_HIDDEN => Ok(Role::Hidden),
                other => Err(invalid(format!("unknown role code {other}"))),
            })
            .collect::<Result<_, _>>()?;
        let roles = RoleAssignment::new(roles);
        let mut strategy = AdversaryStrategy::default();
        let spawners = roles.ids_with(Role::Spawning);
        if !spawners.is_empty() {
            for (a, s) in roles.ids_with(Role::Spoofed).into_iter().enumerate() {
                strategy.spawn_map.entry(spawners[a % spawners.len()]).or_default().push(s);
            }
        }
        let world = World::new(g, roles, channel(epsilon).ffi()?, strategy).ffi()?;
        boxed_world(world, out);
        Ok(())
    })
}

/// # Safety
/// `world` must come from a `cv_world_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn cv_world_free(world: *mut CvWorld) {
    if !world.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(world) });
    }
}

/// Number of robots.
///
/// # Safety
/// `world` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cv_world_size(world: *const CvWorld) -> usize {
    // SAFETY: caller contract.
    unsafe { world.as_ref() }.map_or(0, |w| w.world.n())
}

/// # Safety
/// `world` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cv_world_min_tau(world: *const CvWorld, out: *mut i64) -> CvStatus {
    guard(|| {
        // SAFETY: caller contract.
        let w = unsafe { world.as_ref() }.ok_or_else(|| null("world"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = min_tau(&w.world.graph, &w.world.roles).ffi()?;
        unsafe { *out = t };
        Ok(())
    })
}

/// Second-smallest Laplacian eigenvalue of the full graph.
///
/// # Safety
/// `world` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cv_world_algebraic_connectivity(world: *const CvWorld, out: *mut f64) -> CvStatus {
    guard(|| {
        // SAFETY: caller contract.
        let w = unsafe { world.as_ref() }.ok_or_else(|| null("world"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = algebraic_connectivity(&w.world.graph).ffi()?;
        unsafe { *out = v };
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cv_rounds_bound_theorem1(
    l: usize,
    n: usize,
    epsilon: f64,
    tau: i64,
    d_l: usize,
    delta: f64,
    out: *mut usize,
) -> CvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = rounds_bound_theorem1(l, n, epsilon, tau, d_l, delta).ffi()?;
        unsafe { *out = r };
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cv_rounds_bound_baseline(delta: f64, epsilon: f64, out: *mut usize) -> CvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = rounds_bound_baseline(delta, epsilon).ffi()?;
        unsafe { *out = r };
        Ok(())
    })
}

/// Runs `rounds` observation rounds, the vector exchange and the vote with
/// randomness from `seed`.
///
/// # Safety
/// `world` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cv_find_spoofed_robots(
    world: *const CvWorld,
    rounds: usize,
    seed: u64,
    out: *mut *mut CvTrust,
) -> CvStatus {
    guard(|| {
        // SAFETY: caller contract.
        let w = unsafe { world.as_ref() }.ok_or_else(|| null("world"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = find_spoofed_robots(&w.world, rounds, &mut rng).ffi()?;
        let handle = CvTrust { n: w.world.n(), vectors };
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(())
    })
}

/// # Safety
/// `trust` must come from [`cv_find_spoofed_robots`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cv_trust_free(trust: *mut CvTrust) {
    if !trust.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(trust) });
    }
}

/// Entry `target` of `owner`'s final vector as `CV_TRUST`, `CV_DISTRUST` or
/// `CV_NO_DATA`. `owner` must be legitimate.
///
/// # Safety
/// `trust` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cv_trust_entry(trust: *const CvTrust, owner: usize, target: usize, out: *mut i32) -> CvStatus {
    guard(|| {
        // SAFETY: caller contract.
        let t = unsafe { trust.as_ref() }.ok_or_else(|| null("trust"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if target >= t.n {
            return Err(invalid(format!("target {target} out of range for {} robots", t.n)));
        }
        let v = t
            .vectors
            .get(&owner)
            .ok_or_else(|| invalid(format!("robot {owner} is not a legitimate robot")))?;
        let code = match v.get(target) {
            TrustValue::Trust => CV_TRUST,
            TrustValue::Distrust => CV_DISTRUST,
            TrustValue::NoData => CV_NO_DATA,
        };
        unsafe { *out = code };
        Ok(())
    })
}

/// Whether every legitimate robot's vector equals ground truth.
///
/// # Safety
/// Both handles must be live, from the same world, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cv_trust_all_correct(trust: *const CvTrust, world: *const CvWorld, out: *mut bool) -> CvStatus {
    guard(|| {
        // SAFETY: caller contract.
        let t = unsafe { trust.as_ref() }.ok_or_else(|| null("trust"))?;
        let w = unsafe { world.as_ref() }.ok_or_else(|| null("world"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if t.n != w.world.n() {
            return Err(invalid("trust vectors belong to a different world"));
        }
        unsafe { *out = all_correct(&w.world, &t.vectors) };
        Ok(())
    })
}
