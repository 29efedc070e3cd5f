import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from faceblur.backends import FrameAnnotations, IdentityBlurNet, OracleBlurNet, OracleDetector
from faceblur.geometry import FaceBox
from faceblur.pipelines import DirectFaceBlurrer, IndirectFaceBlurrer, direct_pipeline

from conftest import synthetic_frame, texture


@pytest.fixture
def detector(rng):
    return OracleDetector({"f": FrameAnnotations(faces=(FaceBox(4, 4, 16, 16),))})


class TestSklearnApi:
    def test_get_set_params_round_trip(self, detector):
        est = DirectFaceBlurrer(detector=detector, sigma_scale=3.0)
        params = est.get_params()
        assert params["sigma_scale"] == 3.0
        est.set_params(sigma_scale=5.0)
        assert est.sigma_scale == 5.0

    def test_clone_preserves_params(self, detector):
        est = IndirectFaceBlurrer(blurnet=IdentityBlurNet(), inference_size=256, threshold=0.2)
        copy = clone(est)
        assert copy.inference_size == 256
        assert copy.threshold == 0.2

    def test_fit_returns_self_and_validates(self, detector):
        est = DirectFaceBlurrer(detector=detector)
        assert est.fit() is est
        with pytest.raises(ValueError):
            DirectFaceBlurrer().fit()
        with pytest.raises(ValueError):
            IndirectFaceBlurrer(blurnet=IdentityBlurNet(), inference_size=300).fit()

    def test_composes_in_sklearn_pipeline(self, rng):
        img, faces = synthetic_frame(rng, 48, 48, 1)
        net = OracleBlurNet({"f": FrameAnnotations(faces=faces, width=48, height=48)})
        pipe = Pipeline([("blur", IndirectFaceBlurrer(blurnet=net, inference_size=192))])
        out = pipe.fit_transform([("f", img)])
        assert len(out) == 1 and out[0].shape == img.shape


class TestTransform:
    def test_single_array(self, rng, detector):
        img = texture(rng, 32, 32)
        est = DirectFaceBlurrer(detector=detector)
        out = est.transform(("f", img))
        expected = direct_pipeline(img, detector, frame_id="f")
        np.testing.assert_array_equal(out, expected)

    def test_sequence_of_pairs(self, rng, detector):
        imgs = [texture(rng, 24, 24) for _ in range(3)]
        est = DirectFaceBlurrer(detector=detector)
        outs = est.transform([("f", im) for im in imgs])
        assert len(outs) == 3
        for im, out in zip(imgs, outs):
            np.testing.assert_array_equal(out, direct_pipeline(im, detector, frame_id="f"))

    def test_bare_image_with_frameless_backend(self, rng):
        est = IndirectFaceBlurrer(blurnet=IdentityBlurNet(), inference_size=192)
        img = texture(rng, 40, 40)
        np.testing.assert_array_equal(est.transform(img), img)

    def test_sigma_params_feed_the_rule(self, rng, detector):
        img = texture(rng, 32, 32)
        gentle = DirectFaceBlurrer(detector=detector, sigma_scale=16.0).transform(("f", img))
        strong = DirectFaceBlurrer(detector=detector, sigma_scale=1.0).transform(("f", img))
        assert np.abs(strong - img).sum() > np.abs(gentle - img).sum()
