//! Connectivity repair under the prior-object constraint.

use std::collections::HashMap;

use crate::clustering::SuperpixelLabeling;
use crate::components::label_components;
use crate::prior::{PriorPartition, UNCERTAIN};

/// Makes every superpixel a single 4-connected region.
///
/// The largest component of each superpixel keeps its id. Other components
/// smaller than `min_fragment` are merged into the adjacent superpixel they
/// share the longest boundary with (lowest id on ties). A fragment holding
/// pixels of a prior object may only merge into a superpixel of the same
/// object; fragments made only of uncertain pixels may merge anywhere.
/// Fragments that are large enough, or have no eligible neighbour, become
/// superpixels of their own. Ids are compacted at the end, keeping order.
pub fn enforce_connectivity(
    labeling: &SuperpixelLabeling,
    partition: &PriorPartition,
    min_fragment: usize,
) -> SuperpixelLabeling {
    let (w, h) = labeling.dims();
    let labels = labeling.labels();
    let comps = label_components(labels, w, h, |_| true);
    let nc = comps.count();
    let comp_label: Vec<u32> = comps.first_pixel.iter().map(|&p| labels[p]).collect();

    let mut has_object = vec![false; nc];
    for (p, &c) in comps.ids.iter().enumerate() {
        if partition.label(p) != UNCERTAIN {
            has_object[c as usize] = true;
        }
    }

    // main component per label: largest, earliest in raster order on ties
    let mut main: HashMap<u32, usize> = HashMap::new();
    for c in 0..nc {
        main.entry(comp_label[c])
            .and_modify(|m| {
                if comps.sizes[c] > comps.sizes[*m] {
                    *m = c;
                }
            })
            .or_insert(c);
    }

    let mut adjacency: Vec<HashMap<u32, u32>> = vec![HashMap::new(); nc];
    for p in 0..w * h {
        let a = comps.ids[p];
        let (x, y) = (p % w, p / w);
        let mut add = |q: usize| {
            let b = comps.ids[q];
            if a != b {
                *adjacency[a as usize].entry(b).or_default() += 1;
                *adjacency[b as usize].entry(a).or_default() += 1;
            }
        };
        if x + 1 < w {
            add(p + 1);
        }
        if y + 1 < h {
            add(p + w);
        }
    }

    let mut owner: Vec<u32> = labeling.owners().to_vec();
    let mut group_label = comp_label.clone();
    let mut parent: Vec<usize> = (0..nc).collect();
    let mut members: Vec<Vec<usize>> = (0..nc).map(|c| vec![c]).collect();
    let mut size: Vec<usize> = comps.sizes.clone();

    fn find(parent: &mut [usize], mut c: usize) -> usize {
        while parent[c] != c {
            parent[c] = parent[parent[c]];
            c = parent[c];
        }
        c
    }

    let mut fragments: Vec<usize> = (0..nc).filter(|&c| main[&comp_label[c]] != c).collect();
    fragments.sort_by_key(|&c| (comps.sizes[c], c));

    for f in fragments {
        let label = group_label[f];
        let mut fresh = size[f] >= min_fragment;
        if !fresh {
            let mut shared: HashMap<usize, u32> = HashMap::new();
            for &m in &members[f] {
                for (&nb, &cnt) in &adjacency[m] {
                    let r = find(&mut parent, nb as usize);
                    if r != f {
                        *shared.entry(r).or_default() += cnt;
                    }
                }
            }
            let target = shared
                .into_iter()
                .filter(|&(r, _)| !has_object[f] || owner[group_label[r] as usize] == owner[label as usize])
                .max_by(|a, b| {
                    a.1.cmp(&b.1)
                        .then(group_label[b.0].cmp(&group_label[a.0]))
                        .then(b.0.cmp(&a.0))
                });
            match target {
                Some((r, _)) => {
                    parent[f] = r;
                    let moved = std::mem::take(&mut members[f]);
                    members[r].extend(moved);
                    size[r] += size[f];
                    has_object[r] |= has_object[f];
                }
                None => fresh = true,
            }
        }
        if fresh {
            group_label[f] = owner.len() as u32;
            owner.push(owner[label as usize]);
        }
    }

    let mut out = vec![0u32; w * h];
    for (p, o) in out.iter_mut().enumerate() {
        let r = find(&mut parent, comps.ids[p] as usize);
        *o = group_label[r];
    }
    let mut used = vec![false; owner.len()];
    for &l in &out {
        used[l as usize] = true;
    }
    let mut remap = vec![u32::MAX; owner.len()];
    let mut compact_owner = Vec::new();
    for (l, &u) in used.iter().enumerate() {
        if u {
            remap[l] = compact_owner.len() as u32;
            compact_owner.push(owner[l]);
        }
    }
    for l in out.iter_mut() {
        *l = remap[*l as usize];
    }
    SuperpixelLabeling::new(w, h, out, compact_owner).expect("labels and owners are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::binary_components;

    fn connected_oracle(l: &SuperpixelLabeling) -> bool {
        (0..l.count() as u32).all(|id| {
            let mask: Vec<bool> = l.labels().iter().map(|&v| v == id).collect();
            binary_components(&mask, l.width(), l.height()).count() == 1
        })
    }

    #[test]
    fn connected_labeling_is_unchanged() {
        let labels: Vec<u32> = (0..36).map(|p| ((p % 6) / 3 + 2 * ((p / 6) / 3)) as u32).collect();
        let l = SuperpixelLabeling::new(6, 6, labels, vec![0; 4]).unwrap();
        let part = PriorPartition::whole(6, 6);
        assert_eq!(enforce_connectivity(&l, &part, 4), l);
    }

    #[test]
    fn stray_pixel_joins_surrounding_superpixel() {
        // left half A (0), right half B (1), one A pixel inside B
        let mut labels: Vec<u32> = (0..36).map(|p| if p % 6 < 3 { 0 } else { 1 }).collect();
        labels[2 * 6 + 4] = 0;
        let l = SuperpixelLabeling::new(6, 6, labels.clone(), vec![0, 0]).unwrap();
        let out = enforce_connectivity(&l, &PriorPartition::whole(6, 6), 4);
        labels[2 * 6 + 4] = 1;
        assert_eq!(out.labels(), labels.as_slice());
        assert!(connected_oracle(&out));
    }

    #[test]
    fn fragment_surrounded_by_foreign_object_keeps_fresh_id() {
        // object 0 on the left, object 1 on the right, one object-0 pixel
        // enclosed in object 1's region labeled with superpixel 0
        let mut part_labels: Vec<u32> = (0..36).map(|p| if p % 6 < 3 { 0 } else { 1 }).collect();
        part_labels[2 * 6 + 4] = 0;
        let part = PriorPartition::from_labels(6, 6, part_labels.clone()).unwrap();
        let l = SuperpixelLabeling::new(6, 6, part_labels.clone(), vec![0, 1]).unwrap();
        let out = enforce_connectivity(&l, &part, 4);
        assert_eq!(out.count(), 3);
        let stray = out.labels()[2 * 6 + 4];
        assert_eq!(out.owner(stray), 0);
        assert!(connected_oracle(&out));
        for p in 0..36 {
            assert_eq!(out.owner(out.labels()[p]), part.label(p));
        }
    }

    #[test]
    fn uncertain_fragment_may_cross_objects() {
        let mut part_labels: Vec<u32> = (0..36).map(|p| if p % 6 < 3 { 0 } else { 1 }).collect();
        part_labels[2 * 6 + 4] = UNCERTAIN;
        let part = PriorPartition::from_labels(6, 6, part_labels).unwrap();
        let mut labels: Vec<u32> = (0..36).map(|p| if p % 6 < 3 { 0 } else { 1 }).collect();
        labels[2 * 6 + 4] = 0;
        let l = SuperpixelLabeling::new(6, 6, labels, vec![0, 1]).unwrap();
        let out = enforce_connectivity(&l, &part, 4);
        assert_eq!(out.count(), 2);
        assert_eq!(out.labels()[2 * 6 + 4], 1);
    }

    #[test]
    fn large_fragment_gets_fresh_id() {
        let labels: Vec<u32> = (0..36).map(|p| if (2..4).contains(&(p % 6)) { 1 } else { 0 }).collect();
        let l = SuperpixelLabeling::new(6, 6, labels, vec![0, 0]).unwrap();
        let out = enforce_connectivity(&l, &PriorPartition::whole(6, 6), 4);
        assert_eq!(out.count(), 3);
        assert!(connected_oracle(&out));
    }

    #[test]
    fn random_labelings_become_connected() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let (w, h) = (rng.random_range(1..14), rng.random_range(1..14));
            let objs = rng.random_range(1..4u32);
            let part_labels: Vec<u32> = (0..w * h)
                .map(|p| if rng.random_range(0..6) == 0 { UNCERTAIN } else { (p % w) as u32 * objs / w as u32 })
                .collect();
            let part = PriorPartition::from_labels(w, h, part_labels).unwrap();
            let k = rng.random_range(1..8u32);
            // superpixel ids drawn per object, so containment holds on input
            let owner: Vec<u32> = (0..k * objs).map(|s| s % objs).collect();
            let labels: Vec<u32> = (0..w * h)
                .map(|p| {
                    let o = match part.label(p) {
                        UNCERTAIN => rng.random_range(0..objs),
                        l => l,
                    };
                    o + objs * rng.random_range(0..k)
                })
                .collect();
            let l = SuperpixelLabeling::new(w, h, labels, owner).unwrap();
            let out = enforce_connectivity(&l, &part, rng.random_range(0..6));
            assert!(connected_oracle(&out));
            for p in 0..w * h {
                if part.label(p) != UNCERTAIN {
                    assert_eq!(out.owner(out.labels()[p]), part.label(p));
                }
            }
        }
    }
}
