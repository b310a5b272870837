"""Mean-teacher mechanics: EMA tracking and two-teacher pseudo-label voting.

First shows the EMA teacher converging geometrically toward a frozen
student, then injects junk detections into one teacher and shows the vote
filtering them out.
"""

import numpy as np
from dataclasses import replace

from ttadapt.adaptation import TeacherEnsemble, VotingConfig, ema_update, \
    vote_pseudo_labels
from ttadapt.boxes import BBox, Detection
from ttadapt.detector import FEATURE_DIM, DetectorModel


def main():
    rng = np.random.default_rng(3)
    source = DetectorModel(grid_size=4, num_classes=3,
                           params=rng.normal(0, 0.5, 3 * (FEATURE_DIM + 1)))
    ensemble = TeacherEnsemble.from_source(source, momentum=0.9)
    student = replace(ensemble.student,
                      params=ensemble.student.params + rng.normal(0, 1, source.params.size))
    ensemble = replace(ensemble, student=student)

    print("EMA teacher closing on a frozen student (momentum 0.9):")
    gap0 = np.linalg.norm(ensemble.ema_teacher.params - student.params)
    for k in (1, 5, 10, 25, 50):
        while ensemble.step < k:
            ensemble = replace(ema_update(ensemble), step=ensemble.step + 1)
        gap = np.linalg.norm(ensemble.ema_teacher.params - student.params)
        print(f"  step {k:3d}: gap ratio {gap / gap0:.6f}  "
              f"(0.9^{k} = {0.9 ** k:.6f})")

    print("\nVoting: the EMA teacher hallucinates, the fixed teacher vetoes.")
    real = [Detection(box=BBox(8, 8, 20, 20), class_id=0, score=0.75),
            Detection(box=BBox(30, 5, 42, 18), class_id=1, score=0.55)]
    hallucinated = [Detection(box=BBox(2, 30, 12, 40), class_id=2, score=0.65),
                    Detection(box=BBox(40, 40, 52, 52), class_id=0, score=0.45)]
    confident_novel = [Detection(box=BBox(20, 44, 30, 56), class_id=1, score=0.9)]

    ema_dets = real + hallucinated + confident_novel
    fixed_dets = [replace(d, score=d.score - 0.1) for d in real]
    voted = vote_pseudo_labels(ema_dets, fixed_dets, VotingConfig())

    print(f"  EMA teacher emitted {len(ema_dets)} boxes "
          f"({len(hallucinated)} hallucinated)")
    print(f"  fixed teacher emitted {len(fixed_dets)} boxes")
    print(f"  voted pseudo labels: {len(voted)}")
    for det in voted:
        kind = "agreed" if det.score < 0.85 else "confident solo"
        print(f"    class {det.class_id} score {det.score:.2f} ({kind})")
    print("\nAgreement keeps the two real boxes (fused, score-averaged); the")
    print("hallucinations lack a partner and fall below the solo bar of 0.8;")
    print("the genuinely confident novel box survives on its own.")


if __name__ == "__main__":
    main()
