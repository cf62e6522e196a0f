"""Декораторы: обработка ошибок, подтверждения, замер времени и кеширование."""

import time
from functools import wraps
from typing import Any, Callable, Dict, Optional

import prompt


def handle_fhd_errors(func: Callable) -> Callable:
    """
    Декоратор для централизованной обработки ошибок расчёта.

    Перехватывает исключения пакета и превращает их в Outcome
    с ненулевым кодом возврата и понятным сообщением.

    Коды: 2 - ошибка конфигурации, 3 - сбой решателя или шага,
    1 - прочие ошибки.

    Args:
        func: Функция, возвращающая Outcome

    Returns:
        Обёрнутая функция с обработкой ошибок
    """
    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        # Import at runtime to avoid circular import
        from .errors import (
            ConfigError,
            FhdError,
            SolverError,
            StepError,
        )
        from .models import Outcome
        from .parser import ParseError

        try:
            return func(*args, **kwargs)
        except (ConfigError, ParseError) as e:
            return Outcome(2, f"Ошибка конфигурации: {e}")
        except StepError as e:
            return Outcome(3, f"Сбой расчёта: {e}")
        except SolverError as e:
            return Outcome(3, f"Сбой решателя: {e}")
        except FhdError as e:
            return Outcome(1, f"Ошибка: {e}")
        except FileNotFoundError as e:
            return Outcome(1, f"Ошибка: файл не найден ({e})")
        except Exception as e:
            return Outcome(1, f"Произошла непредвиденная ошибка: {e}")

    return wrapper


def confirm_action(
    action_name: str,
    when: Optional[Callable[..., bool]] = None,
) -> Callable:
    """
    Фабрика декораторов для запроса подтверждения опасных операций.

    Args:
        action_name: Название действия для отображения в запросе
        when: Предикат от аргументов функции; если задан и вернул False,
            подтверждение не запрашивается

    Returns:
        Декоратор для применения к функции

    Example:
        @confirm_action("перезапись результатов", when=outputs_exist)
        def converge(self, spec):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            if when is not None and not when(*args, **kwargs):
                return func(*args, **kwargs)

            confirmation = prompt.string(
                f'Вы уверены, что хотите выполнить "{action_name}"? [y/n]: '
            )

            if confirmation.lower() not in ('y', 'yes', 'д', 'да'):
                from .models import Outcome
                return Outcome(0, f"Операция '{action_name}' отменена.")

            return func(*args, **kwargs)

        return wrapper

    return decorator


def log_time(func: Callable) -> Callable:
    """
    Декоратор для замера времени выполнения функции.

    Использует time.monotonic() и печатает затраченное время в консоль.

    Args:
        func: Функция для декорирования

    Returns:
        Обёрнутая функция с замером времени
    """
    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        start_time = time.monotonic()
        result = func(*args, **kwargs)
        elapsed = time.monotonic() - start_time
        print(f"Функция {func.__name__} выполнилась за {elapsed:.3f} секунд.")
        return result

    return wrapper


def create_cacher() -> Callable:
    """
    Создаёт функцию кэширования с замыканием.

    Кэш хранится в замыкании; ключи произвольные хешируемые значения.
    Используется для постоянных матриц дискретизации и для
    лямбдифицированных точных решений.

    Returns:
        Функция cache_result(key, value_func) с атрибутами clear и stats

    Example:
        cache = create_cacher()
        mass = cache(("mass", "rt0"), lambda: assemble_bilinear(...))
    """
    cache: Dict[Any, Any] = {}
    counters = {"hits": 0, "misses": 0}

    def cache_result(key: Any, value_func: Callable[[], Any]) -> Any:
        """
        Получить результат из кэша или вычислить его.

        Args:
            key: Ключ для кэширования
            value_func: Функция для получения значения, если его нет в кэше

        Returns:
            Закэшированный или новый результат
        """
        if key in cache:
            counters["hits"] += 1
            return cache[key]

        counters["misses"] += 1
        result = value_func()
        cache[key] = result
        return result

    def clear_cache(key: Any = None) -> None:
        """Очистить кэш полностью или для определённого ключа."""
        if key is None:
            cache.clear()
        else:
            cache.pop(key, None)

    def stats() -> Dict[str, int]:
        """Число попаданий, промахов и размер кэша."""
        return {**counters, "size": len(cache)}

    cache_result.clear = clear_cache
    cache_result.stats = stats

    return cache_result
