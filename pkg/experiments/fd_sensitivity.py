import matplotlib.pyplot as plt
import numpy as np

from gtseg.loss.fd_loss import compare_shapes


def ellipse_mask(size, radius, aspect):
    yy, xx = np.mgrid[0:size, 0:size]
    cy = cx = size / 2.0
    return ((((xx - cx) / radius) ** 2 + ((yy - cy) / (radius * aspect)) ** 2) <= 1.0).astype(np.uint8)


def lobed_mask(size, radius, lobe):
    yy, xx = np.mgrid[0:size, 0:size]
    dy, dx = yy - size / 2.0, xx - size / 2.0
    theta = np.arctan2(dy, dx)
    return (np.hypot(dx, dy) <= radius * (1.0 + lobe * np.cos(3.0 * theta))).astype(np.uint8)


def run_fd_sensitivity(size=96, radius=28, beta=10.0):
    reference = ellipse_mask(size, radius, 1.0)
    lobes = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3]
    delta_z, factors = [], []

    print("Running shape-distance sensitivity sweep...\n")

    for lobe in lobes:
        comparison = compare_shapes(lobed_mask(size, radius, lobe), reference, beta=beta)
        delta_z.append(comparison.delta_z)
        factors.append(comparison.factor)
        print(
            f"Lobe amplitude: {lobe:.2f} | "
            f"delta_z: {comparison.delta_z:.4f} | "
            f"factor: {comparison.factor:.4f}"
        )

    fig, ax = plt.subplots()
    ax.plot(lobes, factors, marker="o")
    ax.set_xlabel("Three-lobe deformation amplitude")
    ax.set_ylabel("Loss weight sigmoid(beta * delta_z)")
    ax.set_title("Shape factor against boundary deformation")
    ax.grid(True)
    plt.show()


if __name__ == "__main__":
    run_fd_sensitivity()
