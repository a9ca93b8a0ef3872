//! Property tests over the schema round trip, packing conservation, and
//! mock-suite scoring symmetry.

use proptest::prelude::*;
use vacot::dataset::{
    pack, Modality, SampleKind, SegmentPayload, TrainingSegment, TrainingSequence,
};
use vacot::plan::{
    parse_checklist, CheckItem, CheckType, Checklist, ElementRef, ImageId, PlanOrigin, Region,
};
use vacot::reward::{mock_suite, object_similarity};
use vacot::ImageRef;

fn check_type_strategy() -> impl Strategy<Value = CheckType> {
    prop_oneof![
        Just(CheckType::Identity),
        Just(CheckType::Style),
        Just(CheckType::Attribute),
    ]
}

fn region_strategy() -> impl Strategy<Value = Region> {
    (0.0f64..0.49, 0.0f64..0.49, 0.51f64..1.0, 0.51f64..1.0)
        .prop_map(|(x0, y0, x1, y1)| Region::new(x0, y0, x1, y1).unwrap())
}

fn item_strategy() -> impl Strategy<Value = CheckItem> {
    (
        check_type_strategy(),
        1u32..9,
        "[a-z ]{1,24}",
        proptest::option::of(region_strategy()),
    )
        .prop_map(|(check_type, index, description, region)| {
            let mut source = ElementRef::new(ImageId::Context(index), description.clone());
            if let Some(region) = region {
                source = source.with_region(region);
            }
            CheckItem::new(
                check_type,
                source,
                ElementRef::new(ImageId::Generated, description),
            )
            .unwrap()
        })
}

fn checklist_strategy() -> impl Strategy<Value = Checklist> {
    (
        proptest::collection::vec(item_strategy(), 1..8),
        prop_oneof![
            Just(PlanOrigin::ModelGenerated),
            Just(PlanOrigin::GroundTruthAnnotation),
        ],
    )
        .prop_map(|(items, origin)| Checklist::new(items, origin).unwrap())
}

proptest! {
    #[test]
    fn parse_of_serialize_is_identity(plan in checklist_strategy()) {
        let document = plan.to_document();
        let reparsed = parse_checklist(&document).unwrap();
        prop_assert_eq!(reparsed, plan);
    }

    #[test]
    fn packing_conserves_order_and_respects_budget(
        lengths in proptest::collection::vec(1usize..=1000, 0..64),
        budget in 1000usize..4000,
    ) {
        let sequences: Vec<TrainingSequence> = lengths
            .iter()
            .map(|&tokens| TrainingSequence {
                segments: vec![TrainingSegment {
                    modality: Modality::Text,
                    need_loss: true,
                    payload: SegmentPayload::Text("s".to_string()),
                    token_length: tokens,
                }],
                sample_kind: SampleKind::Planning,
                total_tokens: tokens,
            })
            .collect();

        let batches = pack(sequences, budget).unwrap();
        let flattened: Vec<usize> = batches
            .iter()
            .flat_map(|b| b.sequences.iter().map(|s| s.total_tokens))
            .collect();
        prop_assert_eq!(&flattened, &lengths);
        for batch in &batches {
            prop_assert!(batch.total_tokens <= budget);
            prop_assert!(!batch.sequences.is_empty());
        }
    }

    // The mock detector keys on the description alone and the embedder on
    // the image alone, so swapping the two images must not change the score.
    #[test]
    fn object_similarity_is_symmetric_under_the_mock_suite(
        a in proptest::collection::vec(any::<u8>(), 1..64),
        b in proptest::collection::vec(any::<u8>(), 1..64),
        seed in any::<u64>(),
        description in "[a-z ]{1,16}",
    ) {
        let suite = mock_suite(seed);
        let image_a = ImageRef::Bytes(a);
        let image_b = ImageRef::Bytes(b);
        let forward = object_similarity(&suite, &image_a, &image_b, &description).unwrap();
        let backward = object_similarity(&suite, &image_b, &image_a, &description).unwrap();
        prop_assert_eq!(forward.score, backward.score);
    }
}
