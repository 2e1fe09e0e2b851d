
# Сборка консольного исполняемого файла pxlaplace
import sys  # Текущий интерпретатор и платформа
import shutil  # Перемещение собранного файла
import subprocess  # Запуск pip и PyInstaller
from pathlib import Path  # Работа с путями


def build(executable_name):
    """Сборка исполняемого файла с помощью PyInstaller

    Args:
        executable_name (str): Имя файла в директории dist/
    """
    print(f"Building {executable_name}...")

    # Устанавливаем зависимости проекта из requirements.txt
    subprocess.run([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"], check=True)

    bin_dir = Path("bin")
    bin_dir.mkdir(exist_ok=True)

    # --onefile: один исполняемый файл
    # --console: решатель работает из командной строки
    # --paths: пакеты fem, benchmarks, study и utils лежат в src/
    # --hidden-import: backend matplotlib выбирается при импорте
    subprocess.run([
        "pyinstaller",
        "--onefile",
        "--console",
        "--clean",
        "--paths=src",
        "--hidden-import=matplotlib.backends.backend_agg",
        "--name=pxlaplace",
        "src/main.py"
    ], check=True)

    target = bin_dir / executable_name
    try:
        shutil.move(str(Path("dist") / executable_name), str(target))
        print(f"Build completed! Executable location: {target}")
    except OSError:
        print(f"Build completed! Executable location: dist/{executable_name}")


def main():
    """Основная функция сборки

    Определяет операционную систему и выбирает имя исполняемого файла
    """
    if sys.platform.startswith('win'):
        build("pxlaplace.exe")
    elif sys.platform.startswith(('linux', 'darwin')):
        build("pxlaplace")
    else:
        print("Unsupported platform")


if __name__ == "__main__":
    main()
