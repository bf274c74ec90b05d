from django.http import JsonResponse
from django.shortcuts import get_object_or_404

from .models import TrackingRun


def run_list(request):
    """
    API JSON: dernières exécutions, filtrables par ``kind`` et ``statut``.
    """
    runs = TrackingRun.objects.all()
    kind = request.GET.get('kind', '').strip()
    statut = request.GET.get('statut', '').strip()
    if kind:
        runs = runs.filter(kind=kind)
    if statut:
        runs = runs.filter(statut=statut)
    try:
        limit = max(1, min(int(request.GET.get('limit', 20)), 200))
    except ValueError:
        return JsonResponse({'error': 'limit doit être un entier'}, status=400)

    run_list = [{
        'id': run.id,
        'kind': run.kind,
        'statut': run.statut,
        'statut_display': run.get_statut_display(),
        'preset': run.config.get('preset'),
        'seed': run.seed,
        'date_debut': run.date_debut.isoformat(),
        'wall_time': run.wall_time,
    } for run in runs[:limit]]

    return JsonResponse({'runs': run_list})


def run_detail(request, run_id):
    """
    API JSON: manifeste d'une exécution et ses évaluations.
    """
    run = get_object_or_404(TrackingRun, pk=run_id)
    data = run.manifest()
    data['evaluations'] = [evaluation.as_dict() for evaluation in run.evaluations.all()]
    return JsonResponse(data)
