use crate::error::{Error, Result};
use crate::features::extract_orientation_features;
use crate::motion::{to_rot6d, Motion};
use crate::quantizer::hard_symbols;
use crate::script::SosScript;

fn check_range(x: &Motion, d: &SosScript) -> Result<()> {
    if d.num_frames() != x.num_frames() {
        return Err(Error::Shape(format!(
            "script spans {} frames, motion has {}",
            d.num_frames(),
            x.num_frames()
        )));
    }
    Ok(())
}

/// Fraction of script entries whose symbol matches the motion's hard
/// quantization. An empty script scores 1.
pub fn sos_accuracy(x: &Motion, d: &SosScript) -> Result<f64> {
    check_range(x, d)?;
    if d.is_empty() {
        return Ok(1.0);
    }
    let symbols = hard_symbols(&extract_orientation_features(x)?);
    let hits = d
        .entries()
        .iter()
        .filter(|e| symbols[e.frame][e.part.index()] == e.symbol)
        .count();
    Ok(hits as f64 / d.len() as f64)
}

/// Mean L2 distance between 6D rotations over frames and joints.
pub fn l2_rot6d(x: &Motion, reference: &Motion) -> Result<f64> {
    if x.num_frames() != reference.num_frames() || x.skeleton().len() != reference.skeleton().len() {
        return Err(Error::Shape(format!(
            "motions differ in shape: {}x{} vs {}x{}",
            x.num_frames(),
            x.skeleton().len(),
            reference.num_frames(),
            reference.skeleton().len()
        )));
    }
    let (a, b) = (to_rot6d(x), to_rot6d(reference));
    let mut total = 0.0;
    let mut n = 0usize;
    for (fa, fb) in a.iter().zip(&b) {
        for (ra, rb) in fa.iter().zip(fb) {
            total += ra.iter().zip(rb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            n += 1;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Part;
    use crate::motion::{quat_from_axis_angle, Frame, IDENTITY_QUAT};
    use crate::script::Entry;
    use crate::skeleton::{Joint, Skeleton};
    use crate::synth;
    use std::collections::BTreeMap;

    #[test]
    fn rot6d_distance_of_quarter_yaw_is_two() {
        let skel = Skeleton::new(
            vec![Joint {
                name: "root".into(),
                parent: None,
                offset: [0.0; 3],
            }],
            BTreeMap::new(),
        )
        .unwrap();
        let mk = |q| {
            Motion::new(
                skel.clone(),
                30.0,
                vec![
                    Frame {
                        root_translation: [0.0; 3],
                        rotations: vec![q],
                    };
                    2
                ],
            )
            .unwrap()
        };
        let a = mk(IDENTITY_QUAT);
        let b = mk(quat_from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2));
        assert!((l2_rot6d(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(l2_rot6d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = synth::static_motion(&synth::rest_pose(), 4);
        let b = synth::static_motion(&synth::rest_pose(), 5);
        assert!(l2_rot6d(&a, &b).is_err());
    }

    #[test]
    fn accuracy_bounds() {
        let m = synth::arm_swing_motion(40);
        let empty = SosScript::new(30.0, 40, None, vec![]).unwrap();
        assert_eq!(sos_accuracy(&m, &empty).unwrap(), 1.0);
        let symbols = hard_symbols(&extract_orientation_features(&m).unwrap());
        let right: Vec<Entry> = [0, 10, 18, 30]
            .iter()
            .map(|&f| Entry { part: Part::LeftArm, frame: f, symbol: symbols[f][1] })
            .collect();
        let wrong: Vec<Entry> = right.iter().map(|e| Entry { symbol: (e.symbol + 1) % 26, ..*e }).collect();
        assert_eq!(sos_accuracy(&m, &SosScript::new(30.0, 40, None, right).unwrap()).unwrap(), 1.0);
        assert_eq!(sos_accuracy(&m, &SosScript::new(30.0, 40, None, wrong).unwrap()).unwrap(), 0.0);
        assert!(sos_accuracy(&m, &SosScript::new(30.0, 41, None, vec![]).unwrap()).is_err());
    }
}
