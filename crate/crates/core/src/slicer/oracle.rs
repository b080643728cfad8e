//! Brute-force reference slicer used to cross-check [`super::backward_slice`].
//!
//! Works directly on the raw trace: every use is resolved by scanning
//! backwards for the nearest defining event. No graph, no last-definition
//! table. Quadratic, so only suitable for tests.

use std::collections::BTreeSet;

use crate::interp::{Location, Trace};

use super::{check_criterion, Slice, SliceError, SlicingCriterion};

fn reaching_def(trace: &Trace, event: usize, loc: &Location) -> Result<Option<usize>, SliceError> {
    for j in (0..event).rev() {
        if trace.events[j].defs.contains(loc) {
            return Ok(Some(j));
        }
    }
    if loc.is_initialized_global() {
        Ok(None)
    } else {
        Err(SliceError::DanglingUse {
            event,
            loc: loc.to_string(),
        })
    }
}

pub fn oracle_slice(trace: &Trace, c: &SlicingCriterion) -> Result<Slice, SliceError> {
    check_criterion(c, trace.len(), |loc| trace.events[c.event].uses.contains(loc))?;
    let mut events = BTreeSet::from([c.event]);
    let mut work = Vec::new();
    let root = &trace.events[c.event];
    for loc in &c.locations {
        work.extend(reaching_def(trace, c.event, loc)?);
    }
    work.extend(root.ctrl_parent);
    work.extend(root.call_parent);

    while let Some(e) = work.pop() {
        if !events.insert(e) {
            continue;
        }
        let ev = &trace.events[e];
        for loc in &ev.uses {
            work.extend(reaching_def(trace, e, loc)?);
        }
        work.extend(ev.ctrl_parent);
        work.extend(ev.call_parent);
    }
    Ok(Slice::from_events(c.clone(), events, |e| {
        let ev = &trace.events[e];
        (ev.stmt, ev.put, ev.outcome)
    }))
}
