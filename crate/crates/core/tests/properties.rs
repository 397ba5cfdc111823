use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rnapars::io::{degap, format_newick, parse_newick};
use rnapars::median::cost_il;
use rnapars::oracle::{enumerate_structures, STRUCTURE_CAP};
use rnapars::sampling::{count_structures, Sampler};
use rnapars::{il_distance, rf_nc_sp, sp_cost, Metric, Phylogeny, RnaTree, SecondaryStructure};

fn structure(n: usize, seed: u64) -> SecondaryStructure {
    Sampler::new(n, 0, seed).sample()
}

prop_compose! {
    fn structures(max_n: usize, max_p: usize)(n in 1..=max_n, seeds in prop::collection::vec(any::<u64>(), 1..=max_p))
        -> Vec<SecondaryStructure> {
        seeds.into_iter().map(|s| structure(n, s)).collect()
    }
}

fn phylogeny(seed: u64, leaves: usize) -> Phylogeny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Option<String>> = (0..leaves).map(|k| Some(format!("s{k}"))).collect();
    let mut parents = vec![None; leaves];
    let mut roots: Vec<usize> = (0..leaves).collect();
    while roots.len() > 1 {
        let a = roots.swap_remove(rng.gen_range(0..roots.len()));
        let b = roots.swap_remove(rng.gen_range(0..roots.len()));
        let v = labels.len();
        labels.push(None);
        parents.push(None);
        parents[a] = Some(v);
        parents[b] = Some(v);
        roots.push(v);
    }
    Phylogeny::from_parents(labels, parents).unwrap()
}

proptest! {
    #[test]
    fn dotbracket_round_trip(ss in structures(40, 1)) {
        let s = &ss[0];
        let text = s.to_dotbracket();
        prop_assert_eq!(&SecondaryStructure::from_dotbracket(&text).unwrap(), s);
        prop_assert_eq!(s.to_tree().to_dotbracket(), text.clone());
        prop_assert_eq!(s.to_tree().to_structure().unwrap().to_dotbracket(), text);
    }

    #[test]
    fn conflicts_are_symmetric(ss in structures(14, 2)) {
        let a = ss[0].to_tree();
        let b = ss[ss.len() - 1].to_tree();
        for x in a.internal_leafsets() {
            for y in b.internal_leafsets() {
                prop_assert_eq!(x.conflicts_with(&y), y.conflicts_with(&x));
            }
        }
        for x in a.descendant_leafsets() {
            for y in b.descendant_leafsets() {
                prop_assert_eq!(x.conflicts_with(&y), y.conflicts_with(&x));
            }
        }
    }

    #[test]
    fn median_cost_decomposes_over_leafsets(ss in structures(12, 4), cand in any::<u64>()) {
        let trees: Vec<RnaTree> = ss.iter().map(SecondaryStructure::to_tree).collect();
        let candidate = structure(ss[0].len(), cand).to_tree();
        let direct: usize = trees.iter().map(|t| il_distance(t, &candidate).unwrap()).sum();
        let base: usize = trees.iter().map(|t| t.internal_leafsets().len()).sum();
        let extra: i64 = candidate.internal_leafsets().iter().map(|il| cost_il(il, &trees)).sum();
        prop_assert_eq!(direct as i64, base as i64 + extra);
    }

    #[test]
    fn degap_is_idempotent(ss in structures(20, 3), mask in prop::collection::vec(any::<bool>(), 20)) {
        let gaps: Vec<bool> = ss[0].to_dotbracket().chars().zip(&mask).map(|(c, &g)| g && c == '.').collect();
        prop_assume!(gaps.iter().any(|&g| !g));
        let records: Vec<(String, String)> = ss
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let row: String = s
                    .to_dotbracket()
                    .chars()
                    .zip(&gaps)
                    .map(|(c, &gap)| if gap && k == 0 { '-' } else { c })
                    .collect();
                (format!("r{k}"), row)
            })
            .collect();
        let once = degap(&records).unwrap();
        let kept = gaps.iter().filter(|&&g| !g).count();
        prop_assert!(once.iter().all(|(_, s)| s.len() == kept));
        let again: Vec<(String, String)> = once.iter().map(|(id, s)| (id.clone(), s.to_dotbracket())).collect();
        prop_assert_eq!(degap(&again).unwrap(), once);
    }

    #[test]
    fn newick_round_trip(seed in any::<u64>(), leaves in 1usize..12) {
        let phy = phylogeny(seed, leaves);
        let text = format_newick(&phy);
        let back = parse_newick(&text).unwrap();
        prop_assert_eq!(format_newick(&back), text);
        prop_assert_eq!(back.leaves().len(), leaves);
    }

    #[test]
    fn rf_sp_cost_is_recomputable(ss in structures(30, 6), seed in any::<u64>()) {
        let phy = phylogeny(seed, ss.len().max(2));
        let leaves: BTreeMap<String, RnaTree> = phy
            .leaves()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (phy.node_id(v), ss[k % ss.len()].to_tree()))
            .collect();
        let a = rf_nc_sp(&phy, &leaves).unwrap();
        prop_assert_eq!(a.sp_cost(), sp_cost(&phy, a.trees(), Metric::Rf).unwrap());
    }
}

#[test]
fn counting_matches_enumeration_without_hairpin_limit() {
    for n in 0..=STRUCTURE_CAP {
        let listed = enumerate_structures(n, 0, STRUCTURE_CAP).unwrap().len();
        assert_eq!(count_structures(n, 0), listed.into(), "n = {n}");
    }
}

#[test]
fn mapping_the_roots_never_changes_the_edit_optimum() {
    use rnapars::oracle::{enumerate_mappings, MAPPING_CAP};
    use rnapars::ManhattanCost;
    for n in 0..=6 {
        let trees: Vec<RnaTree> = enumerate_structures(n, 0, STRUCTURE_CAP)
            .unwrap()
            .iter()
            .map(SecondaryStructure::to_tree)
            .collect();
        let root = (0, n + 1);
        for x in &trees {
            for y in &trees {
                let mappings = enumerate_mappings(x, y, MAPPING_CAP).unwrap();
                let best = |keep: &dyn Fn(&rnapars::Mapping) -> bool| {
                    mappings
                        .iter()
                        .filter(|m| keep(m))
                        .map(|m| m.cost(x, y, &ManhattanCost))
                        .fold(f64::INFINITY, f64::min)
                };
                let any = best(&|_| true);
                let rooted = best(&|m| m.pairs().contains(&(root, root)));
                assert_eq!(any, rooted, "{x} vs {y}");
            }
        }
    }
}
