from django.contrib import admin
from django.contrib import messages
from django.utils.html import format_html

from .models import SequenceEvaluation, TrackingRun


STATUT_COLORS = {
    'en_cours': '#f59e0b',  # Orange
    'termine': '#10b981',   # Green
    'echec': '#ef4444',     # Red
}


class SequenceEvaluationInline(admin.TabularInline):
    model = SequenceEvaluation
    extra = 0
    can_delete = False
    readonly_fields = [
        'sequence', 'mota', 'idf1', 'idp', 'idr', 'recall', 'precision',
        'fp', 'fn', 'idsw', 'gt', 'matches', 'predictions',
    ]

    def has_add_permission(self, request, obj=None):
        return False


def mark_as_failed(modeladmin, request, queryset):
    """
    Marquer les exécutions sélectionnées comme en échec.
    """
    count = 0
    for run in queryset.filter(statut='en_cours'):
        run.fail('Marquée en échec depuis l\'administration')
        count += 1
    messages.success(request, f'{count} exécution(s) marquée(s) en échec.')

mark_as_failed.short_description = "✗ Marquer en échec"


@admin.register(TrackingRun)
class TrackingRunAdmin(admin.ModelAdmin):
    list_display = ['id', 'kind', 'get_statut_badge', 'get_preset', 'seed', 'date_debut', 'wall_time']
    list_filter = ['kind', 'statut', 'date_debut']
    search_fields = ['argv', 'message']
    readonly_fields = ['date_debut', 'date_fin', 'wall_time', 'versions', 'argv']
    date_hierarchy = 'date_debut'
    inlines = [SequenceEvaluationInline]
    actions = [mark_as_failed]

    fieldsets = (
        ('Exécution', {
            'fields': ('kind', 'statut', 'seed', 'argv', 'message')
        }),
        ('Reproduction', {
            'fields': ('config', 'inputs', 'outputs', 'versions'),
        }),
        ('Durée', {
            'fields': ('date_debut', 'date_fin', 'wall_time'),
            'classes': ('collapse',)
        }),
    )

    def get_statut_badge(self, obj):
        """
        Display run status as colored badge.
        """
        return format_html(
            '<span style="background-color: {}; color: white; padding: 3px 10px; '
            'border-radius: 12px; font-size: 11px; font-weight: 500;">{}</span>',
            STATUT_COLORS.get(obj.statut, '#64748b'), obj.get_statut_display()
        )
    get_statut_badge.short_description = 'Statut'

    def get_preset(self, obj):
        return obj.config.get('preset', '-')
    get_preset.short_description = 'Preset'

    def has_change_permission(self, request, obj=None):
        """
        Finished runs are an audit trail.
        """
        if obj and obj.statut != 'en_cours':
            return False
        return super().has_change_permission(request, obj)


@admin.register(SequenceEvaluation)
class SequenceEvaluationAdmin(admin.ModelAdmin):
    list_display = ['id', 'run', 'sequence', 'mota', 'idf1', 'idsw']
    list_filter = ['run__kind']
    search_fields = ['sequence']

    def has_add_permission(self, request):
        return False
