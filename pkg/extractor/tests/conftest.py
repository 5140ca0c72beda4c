import numpy as np
import pytest
from PIL import Image, ImageColor

CLASS_NAMES = ["red", "green", "blue", "orange"]


def make_swatch(rng, base_rgb, other_rgb, mix):
    """A 16x16 noisy color swatch, optionally mixed with another color."""
    base = np.asarray(base_rgb, dtype=np.float64)
    other = np.asarray(other_rgb, dtype=np.float64)
    color = (1.0 - mix) * base + mix * other
    pixels = color[None, None, :] + rng.normal(0.0, 18.0, size=(16, 16, 3))
    return Image.fromarray(
        np.clip(pixels, 0, 255).astype(np.uint8), mode="RGB"
    )


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """A small labeled image set: class subfolders of noisy swatches.

    96 decodable images plus one deliberately corrupt file; a third of
    the images are mixed with another class color so the zero-shot
    scores are not trivially one-hot.
    """
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    rgb = {name: ImageColor.getrgb(name) for name in CLASS_NAMES}
    for name in CLASS_NAMES:
        folder = root / name
        folder.mkdir()
        others = [c for c in CLASS_NAMES if c != name]
        for i in range(24):
            mix = 0.45 if i % 3 == 0 else 0.0
            other = others[i % len(others)]
            make_swatch(rng, rgb[name], rgb[other], mix).save(
                folder / f"img_{i:03d}.png"
            )
    (root / CLASS_NAMES[0] / "broken.png").write_bytes(b"not an image")
    classes_file = root / "classes.txt"
    classes_file.write_text("\n".join(CLASS_NAMES) + "\n")
    return root, classes_file
